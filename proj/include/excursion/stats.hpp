#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace excursion::stats {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, n - 1 denominator
  double skewness = 0.0;  // g1 = m3 / m2^{3/2}
  double excess_kurtosis = 0.0;  // g2 = m4 / m2^2 - 3
  double standard_error() const noexcept;
};

// Two-pass moments with compensated sums. Needs at least one value.
Moments moments(std::span<const double> values);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

// sup_x |F_n(x) - Phi(x)| for already standardized values.
double ks_statistic_normal(std::span<const double> standardized);

// Asymptotic Kolmogorov tail P(sqrt(n) D > lambda) with the Stephens
// small-sample adjustment.
double kolmogorov_pvalue(double statistic, std::size_t n);

// Standardizes with the sample mean and standard deviation.
std::vector<double> standardize(std::span<const double> values);

// Null distribution of the KS statistic when mean and variance are
// estimated from the sample (Lilliefors), tabulated by simulation.
class LillieforsTable {
 public:
  LillieforsTable(std::size_t sample_size, int simulations, std::uint64_t seed);

  std::size_t sample_size() const noexcept { return sample_size_; }
  // Upper alpha quantile of the simulated statistics.
  double critical_value(double alpha) const;
  // Fraction of simulated statistics >= the observed one (plus-one rule).
  double pvalue(double statistic) const;

 private:
  std::size_t sample_size_;
  std::vector<double> sorted_;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Wilson score interval for a binomial proportion at the given coverage.
Interval wilson_interval(std::size_t successes, std::size_t trials, double coverage = 0.95);

// Chi-square confidence interval for a normal-population variance.
Interval variance_interval(double sample_variance, std::size_t n, double coverage = 0.95);

// Two-sided interval mean +- z * se.
Interval normal_interval(double mean, double se, double coverage = 0.95);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x; needs two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace excursion::stats
