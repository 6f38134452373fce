#include "excursion/field.hpp"

#include <cmath>
#include <string>

#include "excursion/errors.hpp"
#include "excursion/rng.hpp"
#include "fft.hpp"

namespace excursion {
namespace {

constexpr double kIntTol = 1e-9;

int as_integer(double x, const char* what) {
  const double r = std::round(x);
  if (std::abs(x - r) > kIntTol * std::max(1.0, std::abs(x)))
    throw ConfigError(std::string(what) + " must be an integer multiple of the spacing");
  return static_cast<int>(r);
}

}  // namespace

BoxGeometry BoxGeometry::make(int dimension, double spacing, double n, double epsilon) {
  if (dimension != 2 && dimension != 3) throw ConfigError("dimension must be 2 or 3");
  if (!(spacing > 0.0) || spacing > 1.0) throw ConfigError("spacing must lie in (0, 1]");
  const double per_unit = 1.0 / spacing;
  if (std::abs(per_unit - std::round(per_unit)) > kIntTol * per_unit)
    throw ConfigError("spacing must divide 1 (got " + std::to_string(spacing) + ")");
  if (!(n > 0.0)) throw ConfigError("box half-size n must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  BoxGeometry g;
  g.dimension = dimension;
  g.spacing = spacing;
  g.n = n;
  g.epsilon = epsilon;
  g.inner_half = as_integer(n / spacing, "n");
  g.outer_half = static_cast<int>(std::ceil((1.0 + epsilon) * n / spacing - kIntTol));
  if (g.outer_half < g.inner_half) g.outer_half = g.inner_half;
  return g;
}

int BoxGeometry::sites_per_unit() const noexcept {
  return static_cast<int>(std::lround(1.0 / spacing));
}

std::size_t BoxGeometry::site_count() const noexcept {
  std::size_t s = 1;
  for (int k = 0; k < dimension; ++k) s *= static_cast<std::size_t>(side());
  return s;
}

std::size_t BoxGeometry::stride(int axis) const noexcept {
  std::size_t s = 1;
  for (int k = axis + 1; k < dimension; ++k) s *= static_cast<std::size_t>(side());
  return s;
}

std::array<int, 3> BoxGeometry::unflatten(std::size_t index) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  const auto m = static_cast<std::size_t>(side());
  for (int k = dimension - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(index % m);
    index /= m;
  }
  return idx;
}

std::size_t BoxGeometry::flatten(const std::array<int, 3>& idx) const noexcept {
  std::size_t i = 0;
  for (int k = 0; k < dimension; ++k) i = i * static_cast<std::size_t>(side()) + idx[k];
  return i;
}

bool BoxGeometry::in_inner(const std::array<int, 3>& idx) const noexcept {
  for (int k = 0; k < dimension; ++k)
    if (idx[k] < inner_lo() || idx[k] >= inner_hi()) return false;
  return true;
}

bool BoxGeometry::on_outer_boundary(const std::array<int, 3>& idx) const noexcept {
  for (int k = 0; k < dimension; ++k)
    if (idx[k] == 0 || idx[k] == side() - 1) return true;
  return false;
}

double noise_value(std::uint64_t key, const Site& site, int dimension, double spacing) noexcept {
  return std::pow(spacing, dimension / 2.0) * site_gaussian(key, site);
}

NoiseLattice::NoiseLattice(int dimension, double spacing, Site lower, int extent,
                           std::uint64_t key)
    : dimension_(dimension), spacing_(spacing), lower_(lower), extent_(extent), key_(key) {
  std::size_t count = 1;
  for (int k = 0; k < dimension; ++k) count *= static_cast<std::size_t>(extent);
  values_.resize(count);
  const double scale = std::pow(spacing, dimension / 2.0);
  Site s{0, 0, 0};
  std::size_t i = 0;
  const int e2 = dimension == 3 ? extent : 1;
  for (int a = 0; a < extent; ++a)
    for (int b = 0; b < extent; ++b)
      for (int c = 0; c < e2; ++c, ++i) {
        s = {lower[0] + a, lower[1] + b, dimension == 3 ? lower[2] + c : 0};
        values_[i] = scale * site_gaussian(key, s);
      }
}

FieldSample::FieldSample(BoxGeometry geometry, std::vector<double> values,
                         std::shared_ptr<const KernelSpec> kernel, NoiseProvenance provenance)
    : geometry_(geometry),
      values_(std::move(values)),
      kernel_(std::move(kernel)),
      provenance_(provenance) {
  if (values_.size() != geometry_.site_count())
    throw DomainError("field values do not match the box geometry");
}

FieldSample FieldSample::from_function(
    const BoxGeometry& geometry, const std::function<double(std::span<const double>)>& fn) {
  std::vector<double> values(geometry.site_count());
  std::array<double, 3> x{};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto idx = geometry.unflatten(i);
    for (int k = 0; k < geometry.dimension; ++k) x[k] = geometry.coordinate(idx[k]);
    values[i] = fn(std::span<const double>(x.data(), geometry.dimension));
  }
  return FieldSample(geometry, std::move(values), nullptr, {});
}

double FieldSampler::memory_estimate(int dimension, int torus_side) {
  const double cells = std::pow(double(torus_side), dimension);
  // noise/real buffer + half-spectrum buffer + kernel spectrum + output field
  return cells * (8.0 + 16.0 * 0.5 + 16.0 * 0.5 + 8.0);
}

FieldSampler::FieldSampler(std::shared_ptr<const KernelSpec> kernel, double n, double epsilon,
                           double memory_budget)
    : kernel_(std::move(kernel)) {
  if (!kernel_) throw ConfigError("field sampler needs a kernel");
  const int d = kernel_->dimension();
  geometry_ = BoxGeometry::make(d, kernel_->spacing(), n, epsilon);
  const int pad = kernel_->support_sites();
  const double needed_side = double(geometry_.side()) + 2.0 * pad;
  if (needed_side > 1.0e6)
    throw ResourceError("lattice side too large", needed_side);
  torus_side_ = detail::fft_friendly_size(geometry_.side() + 2 * pad);
  const double need = memory_estimate(d, torus_side_);
  if (need > memory_budget)
    throw ResourceError("field lattice of side " + std::to_string(torus_side_) + " needs about " +
                            std::to_string(static_cast<long long>(need / 1.0e6)) +
                            " MB, over the budget of " +
                            std::to_string(static_cast<long long>(memory_budget / 1.0e6)) + " MB",
                        need);

  plan_ = std::make_unique<detail::RealFftPlan>(d, torus_side_);
  auto buf = detail::alloc_real(plan_->real_size());
  auto spec = detail::alloc_complex(plan_->complex_size());
  std::fill(buf.get(), buf.get() + plan_->real_size(), 0.0);
  const auto L = static_cast<std::size_t>(torus_side_);
  for (const auto& t : kernel_->taps()) {
    std::size_t i = 0;
    for (int k = 0; k < d; ++k)
      i = i * L + static_cast<std::size_t>((t.offset[k] + torus_side_) % torus_side_);
    buf[i] = t.value;
  }
  plan_->forward(buf.get(), spec.get());
  const double scale = 1.0 / double(plan_->real_size());
  kernel_spectrum_.resize(plan_->complex_size());
  for (std::size_t i = 0; i < kernel_spectrum_.size(); ++i)
    kernel_spectrum_[i] = {spec[i][0] * scale, spec[i][1] * scale};
}

FieldSampler::~FieldSampler() = default;

FieldSample FieldSampler::sample(std::uint64_t master_seed, std::uint64_t replicate) const {
  NoiseProvenance prov;
  prov.master_seed = master_seed;
  prov.replicate = replicate;
  prov.w_key = derive_seed(master_seed, replicate, NoiseStream::W);
  prov.wprime_key = derive_seed(master_seed, replicate, NoiseStream::Wprime);
  return sample_with_key(prov.w_key, prov);
}

FieldSample FieldSampler::sample_with_key(std::uint64_t w_key, NoiseProvenance provenance) const {
  provenance.w_key = w_key;
  const int d = geometry_.dimension;
  const int pad = kernel_->support_sites();
  const int extent = geometry_.side() + 2 * pad;
  const std::int64_t lo = -static_cast<std::int64_t>(geometry_.outer_half) - pad;
  const NoiseLattice noise(d, geometry_.spacing, Site{lo, lo, d == 3 ? lo : 0}, extent, w_key);

  const auto L = static_cast<std::size_t>(torus_side_);
  const auto E = static_cast<std::size_t>(extent);
  auto buf = detail::alloc_real(plan_->real_size());
  auto spec = detail::alloc_complex(plan_->complex_size());
  std::fill(buf.get(), buf.get() + plan_->real_size(), 0.0);
  const auto nv = noise.values();
  if (d == 2) {
    for (std::size_t a = 0; a < E; ++a)
      for (std::size_t b = 0; b < E; ++b) buf[a * L + b] = nv[a * E + b];
  } else {
    for (std::size_t a = 0; a < E; ++a)
      for (std::size_t b = 0; b < E; ++b)
        for (std::size_t c = 0; c < E; ++c) buf[(a * L + b) * L + c] = nv[(a * E + b) * E + c];
  }
  plan_->forward(buf.get(), spec.get());
  for (std::size_t i = 0; i < kernel_spectrum_.size(); ++i) {
    const double re = spec[i][0], im = spec[i][1];
    const auto& k = kernel_spectrum_[i];
    spec[i][0] = re * k[0] - im * k[1];
    spec[i][1] = re * k[1] + im * k[0];
  }
  plan_->backward(spec.get(), buf.get());

  // Field site i maps to torus index i + pad; no term wraps around.
  std::vector<double> values(geometry_.site_count());
  const auto M = static_cast<std::size_t>(geometry_.side());
  const auto P = static_cast<std::size_t>(pad);
  if (d == 2) {
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) values[a * M + b] = buf[(a + P) * L + (b + P)];
  } else {
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b)
        for (std::size_t c = 0; c < M; ++c)
          values[(a * M + b) * M + c] = buf[((a + P) * L + (b + P)) * L + (c + P)];
  }
  return FieldSample(geometry_, std::move(values), kernel_, provenance);
}

FieldSample sample_field(std::shared_ptr<const KernelSpec> kernel, double n, double epsilon,
                         std::uint64_t master_seed, std::uint64_t replicate) {
  const FieldSampler sampler(std::move(kernel), n, epsilon);
  return sampler.sample(master_seed, replicate);
}

double Perturbation::at(const std::array<int, 3>& idx, int dimension) const noexcept {
  if (!contains(idx, dimension)) return 0.0;
  std::size_t i = 0;
  for (int k = 0; k < dimension; ++k)
    i = i * static_cast<std::size_t>(upper[k] - lower[k]) + static_cast<std::size_t>(idx[k] - lower[k]);
  return values[i];
}

bool Perturbation::contains(const std::array<int, 3>& idx, int dimension) const noexcept {
  for (int k = 0; k < dimension; ++k)
    if (idx[k] < lower[k] || idx[k] >= upper[k]) return false;
  return true;
}

Perturbation perturbation(const FieldSample& field, const std::array<int, 3>& cube,
                          std::optional<std::uint64_t> wprime_key) {
  const auto& kernel = field.kernel();
  if (!kernel) throw DomainError("perturbation needs a field sampled from a kernel");
  const auto& g = field.geometry();
  const int d = g.dimension;
  const int s = g.sites_per_unit();
  const int pad = kernel->support_sites();
  const std::int64_t noise_lo = -static_cast<std::int64_t>(g.outer_half) - pad;
  const std::int64_t noise_hi = static_cast<std::int64_t>(g.outer_half) + pad;
  for (int k = 0; k < d; ++k) {
    const std::int64_t first = std::int64_t{cube[k]} * s;
    if (first < noise_lo || first + s > noise_hi)
      throw DomainError("cube B_v lies outside the noise lattice");
  }
  const std::uint64_t key_w = field.provenance().w_key;
  const std::uint64_t key_wp = wprime_key.value_or(field.provenance().wprime_key);

  // Noise difference on the cube's sites.
  const int cube_sites = d == 3 ? s * s * s : s * s;
  std::vector<Site> sites;
  std::vector<double> delta;
  sites.reserve(cube_sites);
  delta.reserve(cube_sites);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      for (int c = 0; c < (d == 3 ? s : 1); ++c) {
        Site y{std::int64_t{cube[0]} * s + a, std::int64_t{cube[1]} * s + b,
               d == 3 ? std::int64_t{cube[2]} * s + c : 0};
        sites.push_back(y);
        delta.push_back(noise_value(key_w, y, d, g.spacing) -
                        noise_value(key_wp, y, d, g.spacing));
      }

  Perturbation p;
  std::size_t count = 1;
  for (int k = 0; k < 3; ++k) {
    if (k >= d) {
      p.lower[k] = 0;
      p.upper[k] = 1;
      continue;
    }
    const std::int64_t first = std::int64_t{cube[k]} * s - pad + g.outer_half;
    const std::int64_t last = std::int64_t{cube[k]} * s + s - 1 + pad + g.outer_half;
    p.lower[k] = static_cast<int>(std::max<std::int64_t>(first, 0));
    p.upper[k] = static_cast<int>(std::min<std::int64_t>(last + 1, g.side()));
    if (p.upper[k] < p.lower[k]) p.upper[k] = p.lower[k];
    count *= static_cast<std::size_t>(p.upper[k] - p.lower[k]);
  }
  p.values.assign(count, 0.0);
  std::size_t i = 0;
  for (int a = p.lower[0]; a < p.upper[0]; ++a)
    for (int b = p.lower[1]; b < p.upper[1]; ++b)
      for (int c = p.lower[2]; c < p.upper[2]; ++c, ++i) {
        const std::array<std::int64_t, 3> x{g.global_index(a), g.global_index(b),
                                            d == 3 ? g.global_index(c) : 0};
        double sum = 0.0;
        for (std::size_t j = 0; j < sites.size(); ++j) {
          const LatticeOffset off{static_cast<int>(x[0] - sites[j][0]),
                                  static_cast<int>(x[1] - sites[j][1]),
                                  static_cast<int>(x[2] - sites[j][2])};
          sum += kernel->tap_at(off) * delta[j];
        }
        p.values[i] = sum;
      }
  return p;
}

FieldSample resample_cube(const FieldSample& field, const std::array<int, 3>& cube,
                          std::optional<std::uint64_t> wprime_key) {
  const Perturbation p = perturbation(field, cube, wprime_key);
  const auto& g = field.geometry();
  std::vector<double> values(field.values().begin(), field.values().end());
  std::size_t i = 0;
  for (int a = p.lower[0]; a < p.upper[0]; ++a)
    for (int b = p.lower[1]; b < p.upper[1]; ++b)
      for (int c = p.lower[2]; c < p.upper[2]; ++c, ++i)
        values[g.flatten({a, b, c})] -= p.values[i];
  NoiseProvenance prov = field.provenance();
  if (wprime_key) prov.wprime_key = *wprime_key;
  prov.resampled_cube = cube;
  return FieldSample(g, std::move(values), field.kernel(), prov);
}

}  // namespace excursion
