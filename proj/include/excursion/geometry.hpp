#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "excursion/field.hpp"

namespace excursion {

// Which part of the excursion set the functionals see.
enum class Selection {
  // Components of {f >= l} inside Lambda_n that connect to the outer
  // boundary of the big box (the finitary unbounded component).
  Finitary,
  // Every excursion site inside Lambda_n.
  Full,
};

// Excursion mask over the big box with 4-/6-adjacency component labels.
class LabeledExcursion {
 public:
  static constexpr std::int32_t kBackground = -1;

  LabeledExcursion(const BoxGeometry& geometry, double level, std::vector<std::uint8_t> mask,
                   Selection selection);

  const BoxGeometry& geometry() const noexcept { return geometry_; }
  double level() const noexcept { return level_; }
  Selection selection() const noexcept { return selection_; }

  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  // Dense component id per site, kBackground off the mask.
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }
  std::int32_t component_count() const noexcept { return static_cast<std::int32_t>(touching_.size()); }
  bool touches_boundary(std::int32_t label) const noexcept { return touching_[label] != 0; }
  const std::vector<std::uint8_t>& selected() const noexcept { return selected_; }

  // Whether a foreground site contributes to the functionals (boundary
  // touching for Finitary, always for Full). Independent of the inner box.
  bool counts(std::size_t site) const noexcept {
    return labels_[site] != kBackground &&
           (selection_ == Selection::Full || touching_[labels_[site]] != 0);
  }

 private:
  BoxGeometry geometry_;
  double level_;
  Selection selection_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::int32_t> labels_;
  std::vector<std::uint8_t> touching_;
  std::vector<std::uint8_t> selected_;
};

// Thresholds the field at f >= level and labels components.
LabeledExcursion label_excursion(const FieldSample& field, double level,
                                 Selection selection = Selection::Finitary);

// Labels an explicit mask laid out on the geometry's sites.
LabeledExcursion label_mask(const BoxGeometry& geometry, std::vector<std::uint8_t> mask,
                            Selection selection = Selection::Full);

// h^d times the number of selected sites.
double mu_vol(const LabeledExcursion& lab);

// Selected volume inside the unit cube cube + [0, 1)^d.
double mu_vol_cube(const LabeledExcursion& lab, const std::array<int, 3>& cube);

// Length of the level set {f = level} bounding selected components, by
// marching squares over the cells anchored in Lambda_n. d = 2 only.
double mu_sa(const LabeledExcursion& lab, const FieldSample& field);

// Euler characteristic V - E + F (- C) of the cubical complex spanned by
// the selected sites: sites are vertices, adjacent pairs edges, full 2x2
// blocks faces and full 2x2x2 blocks cells.
std::int64_t mu_ec(const LabeledExcursion& lab);

// Stationary EC count of the counted set: each vertex, edge, face and cell
// is attributed to its lowest corner and counted iff that corner lies in
// Lambda_n. Cells may reach past Lambda_n. Its mean is exactly area times
// the lattice EC density, so it carries no box-boundary term.
std::int64_t ec_anchored(const LabeledExcursion& lab);

enum class ArmMode {
  Bounded,  // the connecting component must avoid the outer boundary
  Any,      // plain connection Lambda_1 <-> boundary of Lambda_m
};

// Whether a foreground component meets Lambda_1 and the outermost site
// layer of Lambda_m (and, for Bounded, does not touch the big box boundary).
bool arm_event(const LabeledExcursion& lab, double m, ArmMode mode = ArmMode::Bounded);

}  // namespace excursion
