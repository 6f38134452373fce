#pragma once

// Brute-force reference computations for 2-D binary masks. They share no
// code with the union-find labeling or the cubical EC count.

#include <cstdint>
#include <vector>

namespace excursion::oracle {

struct MaskStats {
  int components = 0;  // 4-connected foreground components
  int holes = 0;       // 8-connected background components not touching the border
};

// Component id per cell (-1 for background) by recursive flood fill.
std::vector<int> flood_fill_labels(const std::vector<std::uint8_t>& mask, int rows, int cols);

MaskStats count_components_and_holes(const std::vector<std::uint8_t>& mask, int rows, int cols);

// True when the two labelings induce the same partition of the foreground.
bool same_partition(const std::vector<int>& a, const std::vector<std::int32_t>& b);

struct SuiteResult {
  int trials = 0;
  int label_matches = 0;
  int euler_matches = 0;
  bool passed() const noexcept { return label_matches == trials && euler_matches == trials; }
};

// Random side x side masks with foreground density drawn per trial; checks
// union-find labels against flood fill and the cubical EC against
// components - holes.
SuiteResult run_mask_suite(int trials, int side, std::uint64_t seed);

}  // namespace excursion::oracle
