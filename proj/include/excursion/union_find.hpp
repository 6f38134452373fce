#pragma once

#include <cstdint>
#include <vector>

namespace excursion {

// Disjoint sets over 0..n-1 with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::int32_t n) : parent_(n), size_(n, 1) {
    for (std::int32_t i = 0; i < n; ++i) parent_[i] = i;
  }

  std::int32_t find(std::int32_t x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::int32_t a, std::int32_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  std::int32_t size() const noexcept { return static_cast<std::int32_t>(parent_.size()); }

 private:
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> size_;
};

}  // namespace excursion
