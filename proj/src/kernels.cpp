#include "excursion/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "excursion/errors.hpp"
#include "fft.hpp"

namespace excursion {
namespace {

constexpr double kLatticeTol = 1e-9;
constexpr std::size_t kMaxRawPoints = 60'000'000;

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void validate(const KernelParams& p, double spacing) {
  if (p.dimension != 2 && p.dimension != 3)
    throw ConfigError("kernel dimension must be 2 or 3");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ConfigError("lattice spacing must be positive");
  if (p.family == KernelFamily::Matern && !(p.nu > 0.0))
    throw ConfigError("matern kernel needs nu > 0");
  if (p.family == KernelFamily::Rational && !(p.beta > p.dimension))
    throw ConfigError("rational kernel needs beta > dimension");
}

// All lattice offsets with |offset|*h <= radius, in row-major order.
template <typename Fn>
void for_each_offset(int d, double h, double radius, Fn&& fn) {
  const int s = static_cast<int>(std::floor(radius / h + kLatticeTol));
  const double r2 = radius * radius * (1.0 + 1e-12);
  LatticeOffset o{0, 0, 0};
  const int zmax = d == 3 ? s : 0;
  for (int i = -s; i <= s; ++i)
    for (int j = -s; j <= s; ++j)
      for (int k = -zmax; k <= zmax; ++k) {
        o = {i, j, k};
        const double rr = h * h * (double(i) * i + double(j) * j + double(k) * k);
        if (rr <= r2) fn(o, std::sqrt(rr));
      }
}

std::size_t offset_count_estimate(int d, double h, double radius) {
  const double side = 2.0 * std::floor(radius / h) + 1.0;
  return static_cast<std::size_t>(std::pow(side, d));
}

// Canonical representative of an offset under signed permutations.
LatticeOffset canonical(LatticeOffset o, int d) {
  for (int k = 0; k < d; ++k) o[k] = std::abs(o[k]);
  std::sort(o.begin(), o.begin() + d);
  return o;
}

std::vector<std::pair<LatticeOffset, double>> closed_form_raw(
    const KernelParams& p, double h, double radius) {
  if (offset_count_estimate(p.dimension, h, radius) > kMaxRawPoints)
    throw ResourceError("kernel lattice too large for radius " +
                            std::to_string(radius),
                        8.0 * double(offset_count_estimate(p.dimension, h, radius)));
  std::vector<std::pair<LatticeOffset, double>> raw;
  std::array<double, 3> x{};
  for_each_offset(p.dimension, h, radius, [&](const LatticeOffset& o, double) {
    for (int k = 0; k < 3; ++k) x[k] = h * o[k];
    raw.emplace_back(o, raw_q(p, std::span<const double>(x.data(), p.dimension)));
  });
  return raw;
}

// q = F[sqrt(rho)] with rho(t) = (1+|t|^2)^(-nu-d/2), sampled on a torus of
// the given half-extent and restricted to offsets inside the half-extent.
std::vector<std::pair<LatticeOffset, double>> matern_raw(const KernelParams& p,
                                                         double h) {
  const int d = p.dimension;
  const double half_extent = d == 2 ? 32.0 : 16.0;
  const int side = detail::fft_friendly_size(
      2 * static_cast<int>(std::ceil(half_extent / h)));
  const double need = std::pow(double(side), d) * 8.0 * 1.5;
  if (need > 4.0e9)
    throw ResourceError("matern kernel torus too large at this spacing", need);

  detail::RealFftPlan plan(d, side);
  auto spectrum = detail::alloc_complex(plan.complex_size());
  auto values = detail::alloc_real(plan.real_size());
  const int half = side / 2 + 1;
  const double dt = 2.0 * std::numbers::pi / (side * h);
  const double exponent = -(p.nu / 2.0 + d / 4.0);
  auto wrap = [side](int m) { return m < (side + 1) / 2 ? m : m - side; };
  std::size_t idx = 0;
  const int n0 = side, n1 = d == 3 ? side : half, n2 = d == 3 ? half : 1;
  for (int a = 0; a < n0; ++a)
    for (int b = 0; b < n1; ++b)
      for (int c = 0; c < n2; ++c, ++idx) {
        const double ta = dt * wrap(a);
        const double tb = dt * (d == 3 ? wrap(b) : b);
        const double tc = d == 3 ? dt * c : 0.0;
        spectrum[idx][0] = std::pow(1.0 + ta * ta + tb * tb + tc * tc, exponent);
        spectrum[idx][1] = 0.0;
      }
  plan.backward(spectrum.get(), values.get());

  const int reach = side / 2 - 1;
  auto at = [&](const LatticeOffset& o) {
    std::size_t i = 0;
    for (int k = 0; k < d; ++k) i = i * side + static_cast<std::size_t>((o[k] + side) % side);
    return values[i];
  };
  std::vector<std::pair<LatticeOffset, double>> raw;
  for_each_offset(d, h, reach * h, [&](const LatticeOffset& o, double) {
    raw.emplace_back(o, at(canonical(o, d)));
  });
  return raw;
}

double default_raw_radius(const KernelParams& p, double tail_tolerance) {
  const double tol = std::clamp(tail_tolerance, 1e-300, 0.5);
  switch (p.family) {
    case KernelFamily::BargmannFock:
      return std::sqrt(-std::log(tol) / 2.0) + 2.0;
    case KernelFamily::Rational:
      return 4.0 * std::pow(tol, -1.0 / (2.0 * p.beta - p.dimension)) + 2.0;
    case KernelFamily::Matern:
      break;
  }
  return 0.0;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::BargmannFock:
      return "bargmann_fock";
    case KernelFamily::Matern:
      return "matern";
    case KernelFamily::Rational:
      return "rational";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "bargmann_fock") return KernelFamily::BargmannFock;
  if (name == "matern") return KernelFamily::Matern;
  if (name == "rational") return KernelFamily::Rational;
  throw ConfigError("unknown kernel family '" + name + "'");
}

double raw_q(const KernelParams& params, std::span<const double> x) {
  const double r2 = norm2(x);
  switch (params.family) {
    case KernelFamily::BargmannFock:
      return std::pow(2.0 / std::numbers::pi, params.dimension / 4.0) * std::exp(-r2);
    case KernelFamily::Rational:
      return std::pow(1.0 + r2, -params.beta / 2.0);
    case KernelFamily::Matern:
      break;
  }
  throw UnsupportedError("matern kernel has no closed form; lattice only");
}

KernelSpec KernelSpec::build(const KernelParams& params, double spacing,
                             double tail_tolerance) {
  validate(params, spacing);
  if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0))
    throw ConfigError("tail tolerance must lie in (0, 1)");
  auto raw = params.family == KernelFamily::Matern
                 ? matern_raw(params, spacing)
                 : closed_form_raw(params, spacing,
                                   default_raw_radius(params, tail_tolerance));
  return from_raw(params, spacing, std::move(raw), std::nullopt, tail_tolerance);
}

KernelSpec KernelSpec::with_radius(const KernelParams& params, double spacing,
                                   double radius) {
  validate(params, spacing);
  if (!(radius >= 0.0)) throw ConfigError("truncation radius must be >= 0");
  auto raw = params.family == KernelFamily::Matern
                 ? matern_raw(params, spacing)
                 : closed_form_raw(params, spacing,
                                   std::max(radius, default_raw_radius(params, 1e-8)));
  return from_raw(params, spacing, std::move(raw), radius, 0.0);
}

KernelSpec KernelSpec::from_raw(const KernelParams& params, double spacing,
                                std::vector<std::pair<LatticeOffset, double>> raw,
                                std::optional<double> radius,
                                double tail_tolerance) {
  const int d = params.dimension;
  const double h = spacing;
  std::vector<double> r(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& o = raw[i].first;
    r[i] = h * std::sqrt(double(o[0]) * o[0] + double(o[1]) * o[1] + double(o[2]) * o[2]);
  }
  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });

  double total = 0.0;
  for (const auto& [o, v] : raw) total += v * v;

  double cutoff = 0.0;
  if (radius) {
    cutoff = *radius;
  } else {
    // Walk radii from the outside in; stop before the tail exceeds tolerance.
    double tail = 0.0;
    std::size_t i = order.size();
    cutoff = order.empty() ? 0.0 : r[order.back()];
    while (i > 0) {
      std::size_t j = i;
      const double rg = r[order[i - 1]];
      double group = 0.0;
      while (j > 0 && r[order[j - 1]] == rg) {
        group += raw[order[j - 1]].second * raw[order[j - 1]].second;
        --j;
      }
      if (tail + group >= tail_tolerance * total) {
        cutoff = rg;
        break;
      }
      tail += group;
      i = j;
    }
  }

  KernelSpec spec;
  spec.params_ = params;
  spec.spacing_ = h;
  spec.radius_ = cutoff;
  double kept = 0.0;
  int support = 0;
  for (std::size_t i : order) {
    if (r[i] > cutoff * (1.0 + 1e-12) + 1e-15) break;
    spec.taps_.push_back({raw[i].first, raw[i].second});
    kept += raw[i].second * raw[i].second;
    for (int k = 0; k < d; ++k) support = std::max(support, std::abs(raw[i].first[k]));
  }
  if (spec.taps_.empty() || kept <= 0.0)
    throw ConfigError("kernel truncation leaves no mass");
  spec.tail_mass_ = total > 0.0 ? (total - kept) / total : 0.0;
  spec.support_sites_ = support;
  spec.c_norm_ = 1.0 / std::sqrt(std::pow(h, d) * kept);
  for (auto& t : spec.taps_) t.value *= spec.c_norm_;

  const std::size_t side = 2 * static_cast<std::size_t>(support) + 1;
  spec.dense_.assign(d == 3 ? side * side * side : side * side, 0.0);
  for (const auto& t : spec.taps()) {
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k) idx = idx * side + static_cast<std::size_t>(t.offset[k] + support);
    spec.dense_[idx] = t.value;
  }
  return spec;
}

double KernelSpec::lattice_variance() const {
  double s = 0.0;
  for (const auto& t : taps_) s += t.value * t.value;
  return std::pow(spacing_, dimension()) * s;
}

double KernelSpec::tap_at(const LatticeOffset& offset) const {
  const int d = dimension();
  const std::size_t side = 2 * static_cast<std::size_t>(support_sites_) + 1;
  std::size_t idx = 0;
  for (int k = 0; k < d; ++k) {
    if (std::abs(offset[k]) > support_sites_) return 0.0;
    idx = idx * side + static_cast<std::size_t>(offset[k] + support_sites_);
  }
  return dense_[idx];
}

namespace {

std::optional<LatticeOffset> as_lattice(const KernelSpec& spec,
                                        std::span<const double> x) {
  LatticeOffset o{0, 0, 0};
  for (int k = 0; k < spec.dimension(); ++k) {
    const double s = x[k] / spec.spacing();
    const double rs = std::round(s);
    if (std::abs(s - rs) > kLatticeTol || std::abs(rs) > 1e8) return std::nullopt;
    o[k] = static_cast<int>(rs);
  }
  return o;
}

void check_point(const KernelSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.dimension())
    throw DomainError("point dimension does not match kernel dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("point must be finite");
}

}  // namespace

double evaluate_q(const KernelSpec& spec, std::span<const double> x) {
  check_point(spec, x);
  if (spec.family() != KernelFamily::Matern)
    return spec.normalization() * raw_q(spec.params(), x);
  const auto o = as_lattice(spec, x);
  if (!o) throw UnsupportedError("matern kernel evaluated off the lattice");
  return spec.tap_at(*o);
}

double covariance_K(const KernelSpec& spec, std::span<const double> x) {
  check_point(spec, x);
  if (spec.family() == KernelFamily::BargmannFock) return std::exp(-norm2(x) / 2.0);
  const int d = spec.dimension();
  const double h = spec.spacing();
  const auto o = as_lattice(spec, x);
  if (!o && spec.family() == KernelFamily::Matern)
    throw UnsupportedError("matern covariance evaluated off the lattice");
  const double r2max = spec.truncation_radius() * spec.truncation_radius() * (1.0 + 1e-12);
  double s = 0.0;
  std::array<double, 3> y{};
  for (const auto& t : spec.taps()) {
    if (o) {
      LatticeOffset diff{t.offset[0] - (*o)[0], t.offset[1] - (*o)[1], t.offset[2] - (*o)[2]};
      s += t.value * spec.tap_at(diff);
    } else {
      double rr = 0.0;
      for (int k = 0; k < d; ++k) {
        y[k] = h * t.offset[k] - x[k];
        rr += y[k] * y[k];
      }
      if (rr <= r2max)
        s += t.value * spec.normalization() *
             raw_q(spec.params(), std::span<const double>(y.data(), d));
    }
  }
  return std::pow(h, d) * s;
}

double spectral_second_moment(const KernelSpec& spec) {
  if (spec.family() == KernelFamily::BargmannFock) return 1.0;
  const double h = spec.spacing();
  std::array<double, 3> lag{h, 0.0, 0.0};
  std::array<double, 3> zero{};
  const int d = spec.dimension();
  const double k0 = covariance_K(spec, std::span<const double>(zero.data(), d));
  const double k1 = covariance_K(spec, std::span<const double>(lag.data(), d));
  return 2.0 * (k0 - k1) / (h * h);
}

BetaThresholds beta_thresholds(int k, int d) {
  if (k < 4) throw DomainError("smoothness order k must be >= 4");
  const double kk = k;
  const double dd = d;
  const double kk1 = kk * (kk + 1.0);
  return {3.0 * dd, (kk - 1.0) / (kk - 3.0) * 3.0 * dd,
          (9.0 * kk1 - 42.0) / (kk1 - 8.0) * dd};
}

}  // namespace excursion
