#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "excursion/field.hpp"
#include "excursion/geometry.hpp"
#include "excursion/kernels.hpp"
#include "excursion/stats.hpp"

namespace excursion {

enum class Functional { Vol, SA, EC };

std::string to_string(Functional star);
Functional parse_functional(const std::string& name);

// One replicate's value of mu_star(Lambda_n, eps) at one level.
struct FunctionalRecord {
  Functional star = Functional::Vol;
  double level = 0.0;
  double n = 0.0;
  double epsilon = 0.0;
  std::uint64_t replicate = 0;
  double value = 0.0;
};

// Evaluates the requested functionals of one field at each level. With
// Selection::Full the EC value is the anchored (boundary-free) count.
std::vector<FunctionalRecord> measure_functionals(const FieldSample& field,
                                                  std::span<const double> levels,
                                                  std::span<const Functional> functionals,
                                                  Selection selection = Selection::Finitary);

struct CStarEstimate {
  double mean = 0.0;  // mean of mu / (2n)^d
  double se = 0.0;
  double variance = 0.0;  // sample variance of mu / (2n)^d
  std::size_t replicates = 0;
};

// Records must share star, level, n and epsilon.
CStarEstimate estimate_c_star(std::span<const FunctionalRecord> records, int dimension);

struct CltRow {
  double n = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double vnorm = 0.0;  // variance / (2n)^d
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks = 0.0;
  double ks_p = 0.0;            // asymptotic Kolmogorov
  double lilliefors_p = 1.0;    // simulated, estimated-parameter null
  double lilliefors_crit = 0.0; // KS critical value at the configured alpha
};

struct CltReport {
  Functional star = Functional::Vol;
  double level = 0.0;
  double alpha = 0.01;
  std::vector<CltRow> rows;  // ascending n
};

struct CltOptions {
  std::size_t min_replicates = 100;
  double alpha = 0.01;
  int lilliefors_simulations = 2000;
  std::uint64_t lilliefors_seed = 0x5eed11111e4f0125ULL;
};

// Per-n CLT statistics. Records must share star and level and cover at
// least two distinct n.
CltReport clt_report(std::span<const FunctionalRecord> records, int dimension,
                     const CltOptions& options = {});

// Lower/upper 95% bounds for sigma^2 = Var / (2n)^d from the chi-square
// interval of the sample variance.
stats::Interval sigma2_interval(std::span<const FunctionalRecord> records, int dimension,
                                double coverage = 0.95);

struct DecayConfig {
  std::shared_ptr<const KernelSpec> kernel;
  double n = 16.0;
  double epsilon = 0.25;
  double level = -0.5;
  std::uint64_t master_seed = 1;
  std::size_t replicates = 100;
  int max_distance = 10;
  double moment_excess = 0.5;  // the exponent is 2 + moment_excess
  double fit_min = 2.0;
  double fit_max = 10.0;
  bool identical_streams = false;  // W' = W, so every difference vanishes
  unsigned threads = 1;
};

struct DecayRow {
  int bin = 0;              // round(|w|)
  double distance = 0.0;    // mean |w| over the bin's cubes
  std::size_t cubes = 0;
  double mean_abs = 0.0;    // E|Delta_0(B_w)|
  double mean_pow = 0.0;    // E|Delta_0(B_w)|^{2+moment_excess}
  double se = 0.0;          // standard error of mean_abs across replicates
  double max_abs = 0.0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  std::optional<double> slope;  // d log mean_abs / d log distance
  std::size_t fitted_bins = 0;
  std::size_t censored_bins = 0;  // bins in the fit range with mean_abs == 0
  bool degenerate = false;        // every Delta was zero
  double max_abs_delta = 0.0;
  // Per replicate, the mean |Delta| of each bin (indexed by bin).
  std::vector<std::vector<double>> replicate_means;
};

// Volume change per unit cube B_w when the noise on B_0 is resampled.
DecayTable delta_moment_decay(const DecayConfig& config);

struct ArmDecayConfig {
  std::shared_ptr<const KernelSpec> kernel;
  double n = 16.0;
  double epsilon = 0.25;
  double level = -0.5;
  std::uint64_t master_seed = 1;
  std::size_t replicates = 1000;
  std::vector<double> radii{2.0, 4.0, 8.0};
  ArmMode mode = ArmMode::Bounded;
  unsigned threads = 1;
};

struct ArmRow {
  double m = 0.0;
  std::size_t events = 0;
  std::size_t trials = 0;
  double p_hat = 0.0;
  double se = 0.0;
  stats::Interval wilson;
};

struct ArmDecayTable {
  std::vector<ArmRow> rows;
  std::optional<double> slope;  // d log p_hat / d m
  bool censored = false;        // no events at any radius
  // Per replicate, the event indicator at each radius.
  std::vector<std::vector<std::uint8_t>> events;
};

ArmDecayTable arm_decay(const ArmDecayConfig& config);

// Expected level-set length (d=2) / area (d=3) per unit volume of the whole
// excursion set: E|grad f| phi(level).
double kac_rice_sa(double lambda2, int dimension, double level);
double kac_rice_sa(const KernelSpec& spec, double level);

// Expected Euler characteristic per unit area of the whole excursion set
// in d = 2: lambda2 (2 pi)^{-3/2} level exp(-level^2 / 2).
double kac_rice_ec(double lambda2, int dimension, double level);
double kac_rice_ec(const KernelSpec& spec, double level);

}  // namespace excursion
