#include "excursion/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "excursion/errors.hpp"
#include "excursion/rng.hpp"

namespace excursion::stats {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    compensation_ += (sum_ - t) + x;
  else
    compensation_ += (x - t) + sum_;
  sum_ = t;
}

double Moments::standard_error() const noexcept {
  return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) throw DomainError("moments of an empty sample");
  Moments m;
  m.count = values.size();
  const double n = static_cast<double>(values.size());
  CompensatedSum s1;
  for (double v : values) s1.add(v);
  m.mean = s1.value() / n;
  CompensatedSum s2, s3, s4;
  for (double v : values) {
    const double d = v - m.mean;
    const double d2 = d * d;
    s2.add(d2);
    s3.add(d2 * d);
    s4.add(d2 * d2);
  }
  const double m2 = s2.value() / n;
  m.variance = values.size() > 1 ? s2.value() / (n - 1.0) : 0.0;
  if (m2 > 0.0) {
    m.skewness = (s3.value() / n) / std::pow(m2, 1.5);
    m.excess_kurtosis = (s4.value() / n) / (m2 * m2) - 3.0;
  }
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double ks_statistic_normal(std::span<const double> standardized) {
  std::vector<double> sorted(standardized.begin(), standardized.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = normal_cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double kolmogorov_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

std::vector<double> standardize(std::span<const double> values) {
  const auto m = moments(values);
  const double sd = std::sqrt(m.variance);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = sd > 0.0 ? (values[i] - m.mean) / sd : 0.0;
  return out;
}

LillieforsTable::LillieforsTable(std::size_t sample_size, int simulations, std::uint64_t seed)
    : sample_size_(sample_size) {
  if (sample_size < 4) throw DomainError("Lilliefors table needs at least 4 samples");
  if (simulations < 100) throw DomainError("Lilliefors table needs at least 100 simulations");
  std::vector<double> sample(sample_size);
  std::uint64_t counter = 0;
  sorted_.reserve(static_cast<std::size_t>(simulations));
  for (int s = 0; s < simulations; ++s) {
    for (auto& v : sample) {
      const double u1 = keyed_uniform(seed, counter++);
      const double u2 = keyed_uniform(seed, counter++);
      v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    sorted_.push_back(ks_statistic_normal(standardize(sample)));
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double LillieforsTable::critical_value(double alpha) const {
  const double pos = (1.0 - alpha) * static_cast<double>(sorted_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_[lo] * (1.0 - frac) + sorted_[hi] * frac;
}

double LillieforsTable::pvalue(double statistic) const {
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), statistic);
  const auto above = static_cast<double>(sorted_.end() - it);
  return (above + 1.0) / (static_cast<double>(sorted_.size()) + 1.0);
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double coverage) {
  if (trials == 0) throw DomainError("Wilson interval needs at least one trial");
  const double z = normal_quantile(0.5 + coverage / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Interval variance_interval(double sample_variance, std::size_t n, double coverage) {
  if (n < 2) throw DomainError("variance interval needs at least two samples");
  const double dof = static_cast<double>(n - 1);
  const boost::math::chi_squared_distribution<double> chi2(dof);
  const double a = (1.0 - coverage) / 2.0;
  return {dof * sample_variance / boost::math::quantile(chi2, 1.0 - a),
          dof * sample_variance / boost::math::quantile(chi2, a)};
}

Interval normal_interval(double mean, double se, double coverage) {
  const double z = normal_quantile(0.5 + coverage / 2.0);
  return {mean - z * se, mean + z * se};
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least squares needs >= 2 points");
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (sxx.value() <= 0.0) throw DomainError("least squares needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  fit.points = x.size();
  return fit;
}

}  // namespace excursion::stats
