#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "excursion/kernels.hpp"

namespace excursion {

namespace detail {
class RealFftPlan;
}

using Site = std::array<std::int64_t, 3>;

// Site lattice covering the big box Lambda_{(1+eps)n} = [-N, N)^d with
// N = ceil((1+eps) n / h) * h. Sites sit at cell centres (i - N/h + 1/2) h,
// so every site lies in exactly one half-open unit cube v + [0, 1)^d.
struct BoxGeometry {
  int dimension = 2;
  double spacing = 0.25;
  double n = 0.0;
  double epsilon = 0.0;
  int inner_half = 0;  // n / h
  int outer_half = 0;  // ceil((1+eps) n / h)

  // Validates that 1/h and n/h are integers.
  static BoxGeometry make(int dimension, double spacing, double n, double epsilon);

  int side() const noexcept { return 2 * outer_half; }
  int inner_lo() const noexcept { return outer_half - inner_half; }
  int inner_hi() const noexcept { return outer_half + inner_half; }
  int sites_per_unit() const noexcept;
  std::size_t site_count() const noexcept;
  std::size_t stride(int axis) const noexcept;

  std::array<int, 3> unflatten(std::size_t index) const noexcept;
  std::size_t flatten(const std::array<int, 3>& idx) const noexcept;

  double coordinate(int i) const noexcept { return (i - outer_half + 0.5) * spacing; }
  std::int64_t global_index(int i) const noexcept { return i - outer_half; }
  bool in_inner(const std::array<int, 3>& idx) const noexcept;
  bool on_outer_boundary(const std::array<int, 3>& idx) const noexcept;
};

// Per-site white-noise value sqrt(h^d) * g(key, site): a discretized W(dy).
double noise_value(std::uint64_t key, const Site& site, int dimension, double spacing) noexcept;

// Materialized white noise over a box of global site indices.
class NoiseLattice {
 public:
  NoiseLattice(int dimension, double spacing, Site lower, int extent, std::uint64_t key);

  int dimension() const noexcept { return dimension_; }
  double spacing() const noexcept { return spacing_; }
  const Site& lower() const noexcept { return lower_; }
  int extent() const noexcept { return extent_; }
  std::uint64_t key() const noexcept { return key_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  int dimension_;
  double spacing_;
  Site lower_;
  int extent_;
  std::uint64_t key_;
  std::vector<double> values_;
};

struct NoiseProvenance {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;
  std::uint64_t w_key = 0;       // key of the stream W
  std::uint64_t wprime_key = 0;  // key of the resampling stream W'
  // Set on resampled fields: the unit cube whose noise was redrawn.
  std::optional<std::array<int, 3>> resampled_cube;
};

// Field values on the big box plus the provenance needed to regenerate them.
class FieldSample {
 public:
  FieldSample(BoxGeometry geometry, std::vector<double> values,
              std::shared_ptr<const KernelSpec> kernel, NoiseProvenance provenance);

  // Noise-free field from a closed-form function of the site coordinates.
  static FieldSample from_function(const BoxGeometry& geometry,
                                   const std::function<double(std::span<const double>)>& fn);

  const BoxGeometry& geometry() const noexcept { return geometry_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  // Null for synthetic fields.
  const std::shared_ptr<const KernelSpec>& kernel() const noexcept { return kernel_; }
  const NoiseProvenance& provenance() const noexcept { return provenance_; }

 private:
  BoxGeometry geometry_;
  std::vector<double> values_;
  std::shared_ptr<const KernelSpec> kernel_;
  NoiseProvenance provenance_;
};

// Reusable sampler for one (kernel, box). Holds the kernel spectrum and FFT
// plans; sample() is const and may be called from many threads at once.
class FieldSampler {
 public:
  static constexpr double kDefaultMemoryBudget = 4.0e9;  // bytes

  FieldSampler(std::shared_ptr<const KernelSpec> kernel, double n, double epsilon,
               double memory_budget = kDefaultMemoryBudget);
  ~FieldSampler();
  FieldSampler(const FieldSampler&) = delete;
  FieldSampler& operator=(const FieldSampler&) = delete;

  const BoxGeometry& geometry() const noexcept { return geometry_; }
  int torus_side() const noexcept { return torus_side_; }

  FieldSample sample(std::uint64_t master_seed, std::uint64_t replicate) const;
  // Explicit noise key, bypassing seed derivation.
  FieldSample sample_with_key(std::uint64_t w_key, NoiseProvenance provenance) const;

  // Bytes needed for one sample of this configuration.
  static double memory_estimate(int dimension, int torus_side);

 private:
  std::shared_ptr<const KernelSpec> kernel_;
  BoxGeometry geometry_;
  int torus_side_ = 0;
  std::unique_ptr<detail::RealFftPlan> plan_;
  std::vector<std::array<double, 2>> kernel_spectrum_;
};

// One-shot convenience wrapper around FieldSampler.
FieldSample sample_field(std::shared_ptr<const KernelSpec> kernel, double n, double epsilon,
                         std::uint64_t master_seed, std::uint64_t replicate);

// p_v restricted to the field grid: nonzero only within R of the cube B_v.
struct Perturbation {
  std::array<int, 3> lower{};  // first grid index per axis
  std::array<int, 3> upper{};  // one past the last grid index per axis
  std::vector<double> values;  // row-major over [lower, upper)

  double at(const std::array<int, 3>& idx, int dimension) const noexcept;
  bool contains(const std::array<int, 3>& idx, int dimension) const noexcept;
};

// p_v = q * ((W - W') 1_{B_v}) by direct truncated convolution. The W' key
// comes from the field provenance unless overridden.
Perturbation perturbation(const FieldSample& field, const std::array<int, 3>& cube,
                          std::optional<std::uint64_t> wprime_key = std::nullopt);

// f - p_v: the field after redrawing the noise on B_v from W'.
FieldSample resample_cube(const FieldSample& field, const std::array<int, 3>& cube,
                          std::optional<std::uint64_t> wprime_key = std::nullopt);

}  // namespace excursion
