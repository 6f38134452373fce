#include "excursion/oracles.hpp"

#include <functional>
#include <unordered_map>

#include "excursion/field.hpp"
#include "excursion/geometry.hpp"
#include "excursion/rng.hpp"

namespace excursion::oracle {
namespace {

void fill(const std::vector<std::uint8_t>& mask, std::vector<int>& out, int rows, int cols,
          int r, int c, int id, std::uint8_t value, bool diagonal) {
  if (r < 0 || c < 0 || r >= rows || c >= cols) return;
  const int i = r * cols + c;
  if (mask[i] != value || out[i] != -1) return;
  out[i] = id;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (!diagonal && dr != 0 && dc != 0) continue;
      fill(mask, out, rows, cols, r + dr, c + dc, id, value, diagonal);
    }
}

}  // namespace

std::vector<int> flood_fill_labels(const std::vector<std::uint8_t>& mask, int rows, int cols) {
  std::vector<int> out(mask.size(), -1);
  int id = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (mask[r * cols + c] && out[r * cols + c] == -1) fill(mask, out, rows, cols, r, c, id++, 1, false);
  return out;
}

MaskStats count_components_and_holes(const std::vector<std::uint8_t>& mask, int rows, int cols) {
  MaskStats stats;
  std::vector<int> fg(mask.size(), -1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (mask[r * cols + c] && fg[r * cols + c] == -1)
        fill(mask, fg, rows, cols, r, c, stats.components++, 1, false);

  // Background with a one-cell frame, so the outer background is one component.
  const int pr = rows + 2, pc = cols + 2;
  std::vector<std::uint8_t> padded(static_cast<std::size_t>(pr * pc), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) padded[(r + 1) * pc + c + 1] = mask[r * cols + c];
  std::vector<int> bg(padded.size(), -1);
  int background = 0;
  for (int r = 0; r < pr; ++r)
    for (int c = 0; c < pc; ++c)
      if (!padded[r * pc + c] && bg[r * pc + c] == -1)
        fill(padded, bg, pr, pc, r, c, background++, 0, true);
  stats.holes = background - 1;
  return stats;
}

bool same_partition(const std::vector<int>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) return false;
  std::unordered_map<int, std::int32_t> forward;
  std::unordered_map<std::int32_t, int> backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [f, fi] = forward.emplace(a[i], b[i]);
    auto [g, gi] = backward.emplace(b[i], a[i]);
    if (f->second != b[i] || g->second != a[i]) return false;
  }
  return true;
}

SuiteResult run_mask_suite(int trials, int side, std::uint64_t seed) {
  SuiteResult result;
  // h = 1 and epsilon = 0: the big box is exactly the side x side mask.
  const auto geometry = BoxGeometry::make(2, 1.0, side / 2.0, 0.0);
  std::uint64_t counter = 0;
  for (int t = 0; t < trials; ++t) {
    const double density = 0.2 + 0.6 * keyed_uniform(seed, counter++);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(side * side));
    for (auto& v : mask) v = keyed_uniform(seed, counter++) < density;

    const auto lab = label_mask(geometry, mask, Selection::Full);
    const auto reference = flood_fill_labels(mask, side, side);
    result.label_matches += same_partition(reference, lab.labels());
    const auto stats = count_components_and_holes(mask, side, side);
    result.euler_matches += mu_ec(lab) == stats.components - stats.holes;
    ++result.trials;
  }
  return result;
}

}  // namespace excursion::oracle
