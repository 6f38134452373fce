#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace excursion {

enum class KernelFamily { BargmannFock, Matern, Rational };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

// User-facing kernel description, before it is put on a lattice.
struct KernelParams {
  KernelFamily family = KernelFamily::BargmannFock;
  int dimension = 2;
  double nu = 0.0;    // Matern smoothness
  double beta = 0.0;  // Rational decay exponent, must exceed the dimension
  // Smoothness order of the field. Only used for the beta threshold warning.
  std::optional<int> smoothness_k;
};

using LatticeOffset = std::array<int, 3>;

struct KernelTap {
  LatticeOffset offset{};  // in lattice steps; unused trailing entries are 0
  double value = 0.0;      // normalized c_norm * q(offset * h)
};

// A kernel q discretized on the lattice h*Z^d, truncated to the ball of
// radius R and scaled so that h^d * sum q^2 == 1 over the kept taps.
class KernelSpec {
 public:
  static constexpr double kDefaultTailTolerance = 1e-8;

  // Chooses R as the smallest radius whose relative q^2 tail mass is below
  // tail_tolerance.
  static KernelSpec build(const KernelParams& params, double spacing,
                          double tail_tolerance = kDefaultTailTolerance);

  // Uses a caller-chosen truncation radius. A radius below the spacing gives
  // a single-tap (identity) kernel.
  static KernelSpec with_radius(const KernelParams& params, double spacing,
                                double radius);

  const KernelParams& params() const noexcept { return params_; }
  KernelFamily family() const noexcept { return params_.family; }
  int dimension() const noexcept { return params_.dimension; }
  double spacing() const noexcept { return spacing_; }
  double truncation_radius() const noexcept { return radius_; }
  double normalization() const noexcept { return c_norm_; }
  // Largest |offset| component over all taps, in lattice steps.
  int support_sites() const noexcept { return support_sites_; }
  // Relative q^2 mass dropped by truncation.
  double tail_mass() const noexcept { return tail_mass_; }
  const std::vector<KernelTap>& taps() const noexcept { return taps_; }

  // h^d * sum over taps of value^2.
  double lattice_variance() const;

  // Normalized tap value at a lattice offset, 0 outside the truncation ball.
  double tap_at(const LatticeOffset& offset) const;

 private:
  KernelSpec() = default;
  static KernelSpec from_raw(const KernelParams& params, double spacing,
                             std::vector<std::pair<LatticeOffset, double>> raw,
                             std::optional<double> radius,
                             double tail_tolerance);

  KernelParams params_;
  double spacing_ = 0.0;
  double radius_ = 0.0;
  double c_norm_ = 1.0;
  double tail_mass_ = 0.0;
  int support_sites_ = 0;
  std::vector<KernelTap> taps_;
  // Dense lookup over [-support, support]^d.
  std::vector<double> dense_;
};

// Unnormalized closed-form q for BargmannFock and Rational.
double raw_q(const KernelParams& params, std::span<const double> x);

// c_norm * q(x). Matern kernels exist only on the lattice, so off-lattice
// points throw UnsupportedError.
double evaluate_q(const KernelSpec& spec, std::span<const double> x);

// Covariance E[f(0) f(x)]. Closed form exp(-|x|^2/2) for BargmannFock,
// lattice autoconvolution h^d sum_y q(y) q(y - x) otherwise.
double covariance_K(const KernelSpec& spec, std::span<const double> x);

// -d^2K/dx_1^2 at 0. Exactly 1 for BargmannFock; centered second difference
// of covariance_K at lag h for the other families.
double spectral_second_moment(const KernelSpec& spec);

struct BetaThresholds {
  double vol = 0.0;
  double ec = 0.0;
  double sa = 0.0;
};

// Decay exponents beta must exceed for the volume, Euler characteristic and
// surface area CLTs at smoothness order k >= 4.
BetaThresholds beta_thresholds(int k, int d);

}  // namespace excursion
