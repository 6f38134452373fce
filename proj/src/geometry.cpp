#include "excursion/geometry.hpp"

#include <cmath>
#include <limits>

#include "excursion/errors.hpp"
#include "excursion/union_find.hpp"

namespace excursion {
namespace {

struct Labeling {
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> touching;
};

Labeling label_components(const BoxGeometry& g, const std::vector<std::uint8_t>& mask) {
  const std::size_t count = g.site_count();
  if (count > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw ResourceError("too many sites to label", double(count) * 4.0);
  UnionFind uf(static_cast<std::int32_t>(count));
  const int d = g.dimension;
  for (std::size_t s = 0; s < count; ++s) {
    if (!mask[s]) continue;
    const auto idx = g.unflatten(s);
    for (int k = 0; k < d; ++k) {
      if (idx[k] == 0) continue;
      const std::size_t t = s - g.stride(k);
      if (mask[t]) uf.unite(static_cast<std::int32_t>(s), static_cast<std::int32_t>(t));
    }
  }
  Labeling out;
  out.labels.assign(count, LabeledExcursion::kBackground);
  std::vector<std::int32_t> root_label(count, LabeledExcursion::kBackground);
  std::int32_t next = 0;
  for (std::size_t s = 0; s < count; ++s) {
    if (!mask[s]) continue;
    const std::int32_t r = uf.find(static_cast<std::int32_t>(s));
    if (root_label[r] == LabeledExcursion::kBackground) root_label[r] = next++;
    out.labels[s] = root_label[r];
  }
  out.touching.assign(static_cast<std::size_t>(next), 0);
  for (std::size_t s = 0; s < count; ++s)
    if (mask[s] && g.on_outer_boundary(g.unflatten(s))) out.touching[out.labels[s]] = 1;
  return out;
}

// V - E + F - C over sites with anchor(s), counting cells whose corners all
// satisfy in_set.
template <typename InSet, typename Anchor>
std::int64_t euler_count(const BoxGeometry& g, InSet&& in_set, Anchor&& anchor) {
  const int d = g.dimension;
  const int m = g.side();
  std::int64_t chi = 0;
  const std::size_t count = g.site_count();
  for (std::size_t s = 0; s < count; ++s) {
    if (!in_set(s)) continue;
    const auto idx = g.unflatten(s);
    if (!anchor(idx)) continue;
    chi += 1;
    std::array<bool, 3> step{false, false, false};
    for (int k = 0; k < d; ++k) {
      step[k] = idx[k] + 1 < m && in_set(s + g.stride(k));
      if (step[k]) chi -= 1;
    }
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        if (step[a] && step[b] && in_set(s + g.stride(a) + g.stride(b))) chi += 1;
    if (d == 3 && step[0] && step[1] && step[2]) {
      const std::size_t s01 = s + g.stride(0) + g.stride(1);
      const std::size_t s02 = s + g.stride(0) + g.stride(2);
      const std::size_t s12 = s + g.stride(1) + g.stride(2);
      if (in_set(s01) && in_set(s02) && in_set(s12) &&
          in_set(s + g.stride(0) + g.stride(1) + g.stride(2)))
        chi -= 1;
    }
  }
  return chi;
}

}  // namespace

LabeledExcursion::LabeledExcursion(const BoxGeometry& geometry, double level,
                                   std::vector<std::uint8_t> mask, Selection selection)
    : geometry_(geometry), level_(level), selection_(selection), mask_(std::move(mask)) {
  if (mask_.size() != geometry_.site_count())
    throw DomainError("mask does not match the box geometry");
  auto labeling = label_components(geometry_, mask_);
  labels_ = std::move(labeling.labels);
  touching_ = std::move(labeling.touching);
  selected_.assign(mask_.size(), 0);
  for (std::size_t s = 0; s < mask_.size(); ++s)
    selected_[s] = counts(s) && geometry_.in_inner(geometry_.unflatten(s));
}

LabeledExcursion label_excursion(const FieldSample& field, double level, Selection selection) {
  std::vector<std::uint8_t> mask(field.values().size());
  for (std::size_t s = 0; s < mask.size(); ++s) mask[s] = field[s] >= level;
  return LabeledExcursion(field.geometry(), level, std::move(mask), selection);
}

LabeledExcursion label_mask(const BoxGeometry& geometry, std::vector<std::uint8_t> mask,
                            Selection selection) {
  for (auto& v : mask) v = v != 0;
  return LabeledExcursion(geometry, std::numeric_limits<double>::quiet_NaN(), std::move(mask),
                          selection);
}

double mu_vol(const LabeledExcursion& lab) {
  std::size_t count = 0;
  for (auto v : lab.selected()) count += v;
  const auto& g = lab.geometry();
  return std::pow(g.spacing, g.dimension) * static_cast<double>(count);
}

double mu_vol_cube(const LabeledExcursion& lab, const std::array<int, 3>& cube) {
  const auto& g = lab.geometry();
  const int d = g.dimension;
  const int s = g.sites_per_unit();
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    lo[k] = cube[k] * s + g.outer_half;
    hi[k] = lo[k] + s;
    if (lo[k] < 0 || hi[k] > g.side()) throw DomainError("unit cube outside the box");
  }
  std::size_t count = 0;
  for (int a = lo[0]; a < hi[0]; ++a)
    for (int b = lo[1]; b < hi[1]; ++b)
      for (int c = lo[2]; c < hi[2]; ++c) count += lab.selected()[g.flatten({a, b, c})];
  return std::pow(g.spacing, d) * static_cast<double>(count);
}

double mu_sa(const LabeledExcursion& lab, const FieldSample& field) {
  const auto& g = lab.geometry();
  if (g.dimension != 2) throw UnsupportedError("surface area is implemented for d = 2 only");
  if (field.values().size() != g.site_count())
    throw DomainError("field does not match the labeled excursion");
  const double level = lab.level();
  const int m = g.side();
  const auto M = static_cast<std::size_t>(m);
  // Corners counter-clockwise from the anchor; edge e joins corner e, e+1.
  static constexpr double kCx[4] = {0.0, 1.0, 1.0, 0.0};
  static constexpr double kCy[4] = {0.0, 0.0, 1.0, 1.0};
  static constexpr int kCornerEdges[4][2] = {{3, 0}, {0, 1}, {1, 2}, {2, 3}};

  double total = 0.0;
  const int hi = std::min(g.inner_hi(), m - 1);
  for (int i = g.inner_lo(); i < hi; ++i) {
    for (int j = g.inner_lo(); j < hi; ++j) {
      const std::size_t site[4] = {std::size_t(i) * M + j, std::size_t(i + 1) * M + j,
                                   std::size_t(i + 1) * M + j + 1, std::size_t(i) * M + j + 1};
      double v[4];
      bool fg[4];
      int fg_count = 0;
      for (int c = 0; c < 4; ++c) {
        v[c] = field[site[c]] - level;
        fg[c] = v[c] >= 0.0;
        fg_count += fg[c];
      }
      if (fg_count == 0 || fg_count == 4) continue;

      double px[4], py[4], weight[4];
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if (fg[a] == fg[b]) continue;
        const double t = v[a] / (v[a] - v[b]);
        px[e] = kCx[a] + t * (kCx[b] - kCx[a]);
        py[e] = kCy[a] + t * (kCy[b] - kCy[a]);
        weight[e] = lab.counts(site[fg[a] ? a : b]) ? 1.0 : 0.0;
      }
      auto segment = [&](int e1, int e2) {
        const double w = 0.5 * (weight[e1] + weight[e2]);
        if (w == 0.0) return;
        total += w * std::hypot(px[e1] - px[e2], py[e1] - py[e2]);
      };

      const bool saddle = fg_count == 2 && fg[0] == fg[2];
      if (!saddle) {
        int ends[2];
        int k = 0;
        for (int e = 0; e < 4; ++e)
          if (fg[e] != fg[(e + 1) % 4]) ends[k++] = e;
        segment(ends[0], ends[1]);
      } else {
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        // Connected foreground: segments cut off the background corners.
        const bool cut_fg = !(centre >= 0.0);
        for (int c = 0; c < 4; ++c)
          if (fg[c] == cut_fg) segment(kCornerEdges[c][0], kCornerEdges[c][1]);
      }
    }
  }
  return total * g.spacing;
}

std::int64_t mu_ec(const LabeledExcursion& lab) {
  const auto& sel = lab.selected();
  return euler_count(
      lab.geometry(), [&](std::size_t s) { return sel[s] != 0; },
      [](const std::array<int, 3>&) { return true; });
}

std::int64_t ec_anchored(const LabeledExcursion& lab) {
  const auto& g = lab.geometry();
  return euler_count(
      g, [&](std::size_t s) { return lab.counts(s); },
      [&](const std::array<int, 3>& idx) { return g.in_inner(idx); });
}

bool arm_event(const LabeledExcursion& lab, double m, ArmMode mode) {
  const auto& g = lab.geometry();
  if (!(m < g.n)) throw DomainError("arm radius m must be smaller than n");
  if (!(m > 0.0)) throw DomainError("arm radius m must be positive");
  const int d = g.dimension;
  const double tol = 1e-9;
  std::vector<std::uint8_t> hits_centre(static_cast<std::size_t>(lab.component_count()), 0);
  const std::size_t count = g.site_count();
  for (std::size_t s = 0; s < count; ++s) {
    const auto label = lab.labels()[s];
    if (label == LabeledExcursion::kBackground) continue;
    const auto idx = g.unflatten(s);
    bool inside = true;
    for (int k = 0; k < d && inside; ++k) inside = std::abs(g.coordinate(idx[k])) <= 1.0 + tol;
    if (inside) hits_centre[label] = 1;
  }
  const double layer = m - 0.5 * g.spacing - tol;
  for (std::size_t s = 0; s < count; ++s) {
    const auto label = lab.labels()[s];
    if (label == LabeledExcursion::kBackground || !hits_centre[label]) continue;
    if (mode == ArmMode::Bounded && lab.touches_boundary(label)) continue;
    const auto idx = g.unflatten(s);
    double sup = 0.0;
    for (int k = 0; k < d; ++k) sup = std::max(sup, std::abs(g.coordinate(idx[k])));
    if (sup >= layer && sup <= m + tol) return true;
  }
  return false;
}

}  // namespace excursion
