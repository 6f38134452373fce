#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "excursion/errors.hpp"
#include "excursion/field.hpp"
#include "excursion/kernels.hpp"
#include "excursion/rng.hpp"
#include "excursion/stats.hpp"

using namespace excursion;

namespace {

std::shared_ptr<const KernelSpec> bf_kernel(double h, int d = 2) {
  KernelParams p;
  p.family = KernelFamily::BargmannFock;
  p.dimension = d;
  return std::make_shared<const KernelSpec>(KernelSpec::build(p, h));
}

std::shared_ptr<const KernelSpec> rational_kernel(double beta, double h, double tail = 1e-8) {
  KernelParams p;
  p.family = KernelFamily::Rational;
  p.dimension = 2;
  p.beta = beta;
  return std::make_shared<const KernelSpec>(KernelSpec::build(p, h, tail));
}

// A field whose values are irrelevant; only the noise keys matter for p_v.
FieldSample keyed_placeholder(const std::shared_ptr<const KernelSpec>& kernel, double n,
                              std::uint64_t master, std::uint64_t replicate) {
  const auto g = BoxGeometry::make(kernel->dimension(), kernel->spacing(), n, 0.0);
  NoiseProvenance prov;
  prov.master_seed = master;
  prov.replicate = replicate;
  prov.w_key = derive_seed(master, replicate, NoiseStream::W);
  prov.wprime_key = derive_seed(master, replicate, NoiseStream::Wprime);
  return FieldSample(g, std::vector<double>(g.site_count(), 0.0), kernel, prov);
}

// Minimum Euclidean distance from grid site idx to the sites of cube v.
double distance_to_cube(const BoxGeometry& g, const std::array<int, 3>& idx,
                        const std::array<int, 3>& v) {
  const int s = g.sites_per_unit();
  double d2 = 0.0;
  for (int k = 0; k < g.dimension; ++k) {
    const std::int64_t x = g.global_index(idx[k]);
    const std::int64_t lo = std::int64_t{v[k]} * s, hi = lo + s - 1;
    const std::int64_t gap = x < lo ? lo - x : (x > hi ? x - hi : 0);
    d2 += double(gap) * double(gap);
  }
  return std::sqrt(d2) * g.spacing;
}

}  // namespace

TEST_CASE("Dirac kernel reproduces the scaled white noise") {
  KernelParams p;
  p.family = KernelFamily::BargmannFock;
  const auto dirac = std::make_shared<const KernelSpec>(KernelSpec::with_radius(p, 0.25, 0.1));
  const FieldSampler sampler(dirac, 2.0, 0.25);
  const auto f = sampler.sample(7, 3);
  const auto& g = f.geometry();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const auto idx = g.unflatten(i);
    const Site site{g.global_index(idx[0]), g.global_index(idx[1]), 0};
    worst = std::max(worst, std::abs(f[i] - site_gaussian(f.provenance().w_key, site)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("Bargmann-Fock field has unit site variance") {
  // 16 boxes of 10^6 sites: the effective sample size (area / integral of
  // K^2) is about 3e5, so the standard error of the variance is ~0.25%.
  const FieldSampler sampler(bf_kernel(0.25), 125.0, 0.0);
  stats::CompensatedSum sum, sum2;
  std::size_t count = 0;
  for (std::uint64_t r = 0; r < 16; ++r) {
    const auto f = sampler.sample(2024, r);
    for (double v : f.values()) {
      sum.add(v);
      sum2.add(v * v);
    }
    count += f.values().size();
  }
  const double mean = sum.value() / double(count);
  const double var = sum2.value() / double(count) - mean * mean;
  CAPTURE(var);
  CHECK(count == 16u * 1000u * 1000u);
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("lag-one covariance at h = 0.5") {
  const double h = 0.5;
  const FieldSampler sampler(bf_kernel(h), 200.0, 0.0);
  const auto& g = sampler.geometry();
  stats::CompensatedSum prod;
  std::size_t count = 0;
  for (std::uint64_t r = 0; r < 8; ++r) {
    const auto f = sampler.sample(99, r);
    for (int i = 0; i + 1 < g.side(); ++i)
      for (int j = 0; j < g.side(); ++j) {
        prod.add(f[g.flatten({i, j, 0})] * f[g.flatten({i + 1, j, 0})]);
        ++count;
      }
  }
  const double cov = prod.value() / double(count);
  CAPTURE(cov);
  CHECK(std::abs(cov - std::exp(-h * h / 2.0)) < 0.01);
}

TEST_CASE("sampling is deterministic in the seed") {
  const auto kernel = bf_kernel(0.25);
  const FieldSampler a(kernel, 4.0, 0.25);
  const FieldSampler b(kernel, 4.0, 0.25);
  const auto f1 = a.sample(11, 5);
  const auto f2 = b.sample(11, 5);
  const auto f3 = a.sample(11, 6);
  REQUIRE(f1.values().size() == f2.values().size());
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < f1.values().size(); ++i) {
    identical = identical && f1[i] == f2[i];
    differs = differs || f1[i] != f3[i];
  }
  CHECK(identical);
  CHECK(differs);
  CHECK(f1.provenance().w_key != f1.provenance().wprime_key);
}

TEST_CASE("field values do not depend on the box size") {
  // The noise is keyed by global site coordinates and the convolution has no
  // wrap-around, so a smaller box sees the same values on shared sites.
  const auto kernel = bf_kernel(0.25);
  const FieldSampler big(kernel, 6.0, 0.25);
  const FieldSampler small(kernel, 3.0, 0.0);
  const auto key = derive_seed(5, 0, NoiseStream::W);
  const auto fb = big.sample_with_key(key, {});
  const auto fs = small.sample_with_key(key, {});
  const auto& gb = fb.geometry();
  const auto& gs = fs.geometry();
  double worst = 0.0;
  for (std::size_t i = 0; i < gs.site_count(); ++i) {
    const auto idx = gs.unflatten(i);
    const int shift = gb.outer_half - gs.outer_half;
    worst = std::max(worst, std::abs(fs[i] - fb[gb.flatten({idx[0] + shift, idx[1] + shift, 0})]));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("resampling is local and equals f - p_v") {
  const auto kernel = bf_kernel(0.25);
  const FieldSampler sampler(kernel, 4.0, 0.25);
  const auto f = sampler.sample(3, 1);
  const std::array<int, 3> v{1, -2, 0};
  const auto p = perturbation(f, v);
  const auto f2 = resample_cube(f, v);
  const auto again = resample_cube(f, v);
  const auto& g = f.geometry();
  const double R = kernel->truncation_radius();
  bool outside_identical = true, inside_exact = true, repeatable = true;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < g.site_count(); ++i) {
    const auto idx = g.unflatten(i);
    repeatable = repeatable && f2[i] == again[i];
    if (distance_to_cube(g, idx, v) > R + 1e-9) {
      outside_identical = outside_identical && f2[i] == f[i];
      if (p.contains(idx, 2)) outside_identical = outside_identical && p.at(idx, 2) == 0.0;
    } else {
      inside_exact = inside_exact && f2[i] == f[i] - p.at(idx, 2);
      changed += f2[i] != f[i];
    }
  }
  CHECK(outside_identical);
  CHECK(inside_exact);
  CHECK(repeatable);
  CHECK(changed > 0);
  REQUIRE(f2.provenance().resampled_cube.has_value());
  CHECK(*f2.provenance().resampled_cube == v);
}

TEST_CASE("identical noise streams give a zero perturbation") {
  const auto kernel = bf_kernel(0.25);
  const FieldSampler sampler(kernel, 4.0, 0.25);
  const auto f = sampler.sample(3, 1);
  const auto p = perturbation(f, {0, 0, 0}, f.provenance().w_key);
  for (double x : p.values) CHECK(x == 0.0);
}

TEST_CASE("perturbation variance matches 2 h^d sum q^2") {
  const double h = 0.25;
  const auto kernel = bf_kernel(h);
  const double c = kernel->normalization();
  const double R = kernel->truncation_radius();
  const std::array<int, 3> v{0, 0, 0};
  // Global site indices of the evaluation points.
  const std::vector<std::array<int, 2>> points{{0, 0}, {2, 3}, {-3, 1}, {6, 2}, {-5, -4}};
  const auto probe = keyed_placeholder(kernel, 4.0, 0, 0);
  const auto& g = probe.geometry();

  std::vector<std::vector<double>> samples(points.size());
  const std::size_t reps = 10000;
  for (std::uint64_t r = 0; r < reps; ++r) {
    const auto f = keyed_placeholder(kernel, 4.0, 77, r);
    const auto p = perturbation(f, v);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::array<int, 3> idx{points[k][0] + g.outer_half, points[k][1] + g.outer_half, 0};
      samples[k].push_back(p.at(idx, 2));
    }
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    // Oracle from the closed-form kernel over the 16 sites of B_0.
    double oracle = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double dx = h * (points[k][0] - a), dy = h * (points[k][1] - b);
        const double r2 = dx * dx + dy * dy;
        if (r2 <= R * R) {
          const double q = c * std::sqrt(2.0 / std::numbers::pi) * std::exp(-r2);
          oracle += q * q;
        }
      }
    oracle *= 2.0 * h * h;
    stats::CompensatedSum s2;
    for (double x : samples[k]) s2.add(x * x);
    const double est = s2.value() / double(reps);
    const double se = oracle * std::sqrt(2.0 / double(reps));
    CAPTURE(k);
    CAPTURE(est);
    CAPTURE(oracle);
    CHECK(std::abs(est - oracle) < 4.0 * se);
  }
}

TEST_CASE("resampled field keeps the marginal distribution") {
  const auto kernel = bf_kernel(0.25);
  const FieldSampler sampler(kernel, 2.0, 0.25);
  const auto& g = sampler.geometry();
  const std::size_t idx = g.flatten({g.outer_half + 1, g.outer_half + 2, 0});  // inside B_0
  std::vector<double> before, after;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    const auto f = sampler.sample(31, r);
    const auto f2 = resample_cube(f, {0, 0, 0});
    before.push_back(f[idx]);
    after.push_back(f2[idx]);
  }
  const auto mb = stats::moments(before);
  const auto ma = stats::moments(after);
  const double se = std::sqrt(2.0 / 2000.0);
  CHECK(std::abs(ma.variance - 1.0) < 4.0 * se);
  CHECK(std::abs(mb.variance - 1.0) < 4.0 * se);
  CHECK(std::abs(ma.mean) < 4.0 / std::sqrt(2000.0));
}

TEST_CASE("perturbation decays like |v - w|^-beta") {
  // A tight tail tolerance keeps the kernel support beyond |v - w| = 10, so
  // the decay is measured rather than cut off by the truncation radius.
  const double beta = 7.0;
  const auto kernel = rational_kernel(beta, 0.25, 1e-16);
  REQUIRE(kernel->truncation_radius() > 11.0);
  const int s = 4;
  std::vector<double> lx, ly;
  std::vector<double> mean_max(11, 0.0);
  const std::size_t reps = 200;
  for (std::uint64_t r = 0; r < reps; ++r) {
    const auto f = keyed_placeholder(kernel, 12.0, 8, r);
    const auto& g = f.geometry();
    const auto p = perturbation(f, {0, 0, 0});
    for (int dist = 2; dist <= 10; ++dist) {
      double m = 0.0;
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) {
          const std::array<int, 3> idx{dist * s + a + g.outer_half, b + g.outer_half, 0};
          m = std::max(m, std::abs(p.at(idx, 2)));
        }
      mean_max[dist] += m / double(reps);
    }
  }
  for (int dist = 2; dist <= 10; ++dist) {
    lx.push_back(std::log(double(dist)));
    ly.push_back(std::log(mean_max[dist]));
  }
  const auto fit = stats::least_squares(lx, ly);
  CAPTURE(fit.slope);
  CHECK(fit.slope <= -beta + 1.0);
}

TEST_CASE("white noise is iid N(0, h^d)") {
  const double h = 0.25;
  const std::uint64_t key = derive_seed(12, 0, NoiseStream::W);
  std::vector<double> z;
  stats::CompensatedSum lag;
  double prev = 0.0;
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 250; ++j) {
      const double w = noise_value(key, {i - 200, j - 125, 0}, 2, h);
      z.push_back(w / h);
      if (j > 0) lag.add(w * prev / (h * h));
      prev = w;
    }
  const auto m = stats::moments(z);
  const double N = double(z.size());
  CHECK(std::abs(m.mean) < 4.0 / std::sqrt(N));
  CHECK(std::abs(m.variance - 1.0) < 4.0 * std::sqrt(2.0 / N));
  CHECK(std::abs(lag.value() / (400.0 * 249.0)) < 4.0 / std::sqrt(400.0 * 249.0));
  CHECK(std::abs(m.skewness) < 4.0 * std::sqrt(6.0 / N));
  CHECK(std::abs(m.excess_kurtosis) < 4.0 * std::sqrt(24.0 / N));
  std::sort(z.begin(), z.end());
  CHECK(stats::kolmogorov_pvalue(stats::ks_statistic_normal(z), z.size()) > 0.001);
}

TEST_CASE("empirical covariance is stationary") {
  const double h = 0.25;
  const FieldSampler sampler(bf_kernel(h), 4.0, 0.25);
  const auto& g = sampler.geometry();
  const std::vector<std::array<int, 2>> lags{{1, 0}, {2, 0}, {3, 0}, {4, 0}, {6, 0},
                                             {1, 1}, {2, 2}, {3, 1}, {0, 5}, {2, 4}};
  const std::size_t reps = 200;
  // Two disjoint regions of the inner box: left and right halves.
  for (int region = 0; region < 2; ++region) {
    const int i_lo = region == 0 ? g.inner_lo() : g.outer_half;
    const int i_hi = region == 0 ? g.outer_half : g.inner_hi();
    for (const auto& lag : lags) {
      std::vector<double> per_rep;
      for (std::uint64_t r = 0; r < reps; ++r) {
        const auto f = sampler.sample(404, r);
        stats::CompensatedSum s;
        std::size_t c = 0;
        for (int i = i_lo; i < i_hi; ++i)
          for (int j = g.inner_lo(); j < g.inner_hi(); ++j) {
            s.add(f[g.flatten({i, j, 0})] * f[g.flatten({i + lag[0], j + lag[1], 0})]);
            ++c;
          }
        per_rep.push_back(s.value() / double(c));
      }
      const auto m = stats::moments(per_rep);
      const double K = std::exp(-0.5 * h * h * (lag[0] * lag[0] + lag[1] * lag[1]));
      CAPTURE(region);
      CAPTURE(lag[0]);
      CAPTURE(lag[1]);
      CHECK(std::abs(m.mean - K) < 5.0 * m.standard_error());
    }
  }
}

TEST_CASE("configuration and resource errors") {
  KernelParams p;
  p.family = KernelFamily::BargmannFock;
  CHECK_THROWS_AS(BoxGeometry::make(2, 0.3, 3.0, 0.25), ConfigError);
  CHECK_THROWS_AS(BoxGeometry::make(2, 0.25, 3.1, 0.25), ConfigError);
  CHECK_THROWS_AS(BoxGeometry::make(2, 0.25, 4.0, -0.1), ConfigError);
  CHECK_THROWS_AS(BoxGeometry::make(4, 0.25, 4.0, 0.1), ConfigError);

  const auto kernel = bf_kernel(0.25);
  try {
    const FieldSampler huge(kernel, 4096.0, 0.25, 1e6);
    FAIL("expected a resource error");
  } catch (const ResourceError& e) {
    CHECK(e.required_bytes() > 1e6);
  }
  CHECK(FieldSampler::memory_estimate(2, 1024) > 1024.0 * 1024.0 * 8.0);

  const FieldSampler sampler(kernel, 2.0, 0.25);
  const auto f = sampler.sample(1, 0);
  CHECK_THROWS_AS(perturbation(f, {40, 0, 0}), DomainError);
  const auto synthetic =
      FieldSample::from_function(f.geometry(), [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_AS(perturbation(synthetic, {0, 0, 0}), DomainError);
}

TEST_CASE("three-dimensional fields") {
  const auto kernel = bf_kernel(0.5, 3);
  const FieldSampler sampler(kernel, 4.0, 0.25);
  const auto f = sampler.sample(1, 0);
  const auto m = stats::moments(f.values());
  CHECK(f.values().size() == std::size_t(20 * 20 * 20));
  CHECK(m.variance > 0.5);
  CHECK(m.variance < 1.5);
  const auto f2 = resample_cube(f, {0, 0, 0});
  CHECK(f2.values().size() == f.values().size());
}
