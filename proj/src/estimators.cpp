#include "excursion/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "excursion/errors.hpp"
#include "excursion/parallel.hpp"

namespace excursion {

std::string to_string(Functional star) {
  switch (star) {
    case Functional::Vol:
      return "vol";
    case Functional::SA:
      return "sa";
    case Functional::EC:
      return "ec";
  }
  return "unknown";
}

Functional parse_functional(const std::string& name) {
  if (name == "vol") return Functional::Vol;
  if (name == "sa") return Functional::SA;
  if (name == "ec") return Functional::EC;
  throw ConfigError("unknown functional '" + name + "'");
}

std::vector<FunctionalRecord> measure_functionals(const FieldSample& field,
                                                  std::span<const double> levels,
                                                  std::span<const Functional> functionals,
                                                  Selection selection) {
  const auto& g = field.geometry();
  std::vector<FunctionalRecord> out;
  out.reserve(levels.size() * functionals.size());
  for (double level : levels) {
    const auto lab = label_excursion(field, level, selection);
    for (Functional star : functionals) {
      FunctionalRecord r;
      r.star = star;
      r.level = level;
      r.n = g.n;
      r.epsilon = g.epsilon;
      r.replicate = field.provenance().replicate;
      switch (star) {
        case Functional::Vol:
          r.value = mu_vol(lab);
          break;
        case Functional::SA:
          r.value = mu_sa(lab, field);
          break;
        case Functional::EC:
          r.value = static_cast<double>(selection == Selection::Full ? ec_anchored(lab)
                                                                    : mu_ec(lab));
          break;
      }
      out.push_back(r);
    }
  }
  return out;
}

namespace {

double box_volume(double n, int dimension) { return std::pow(2.0 * n, dimension); }

void check_homogeneous(std::span<const FunctionalRecord> records, bool same_n) {
  if (records.empty()) throw DomainError("no functional records");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.star != first.star || r.level != first.level)
      throw DomainError("records mix functionals or levels");
    if (same_n && (r.n != first.n || r.epsilon != first.epsilon))
      throw DomainError("records mix box sizes");
  }
}

}  // namespace

CStarEstimate estimate_c_star(std::span<const FunctionalRecord> records, int dimension) {
  check_homogeneous(records, true);
  if (records.size() < 2) throw DomainError("c_star estimate needs at least 2 replicates");
  const double vol = box_volume(records.front().n, dimension);
  std::vector<double> normalized;
  normalized.reserve(records.size());
  for (const auto& r : records) normalized.push_back(r.value / vol);
  const auto m = stats::moments(normalized);
  return {m.mean, m.standard_error(), m.variance, m.count};
}

CltReport clt_report(std::span<const FunctionalRecord> records, int dimension,
                     const CltOptions& options) {
  check_homogeneous(records, false);
  std::map<double, std::vector<double>> by_n;
  for (const auto& r : records) by_n[r.n].push_back(r.value);
  if (by_n.size() < 2) throw DomainError("CLT report needs at least two distinct n");

  CltReport report;
  report.star = records.front().star;
  report.level = records.front().level;
  report.alpha = options.alpha;
  std::map<std::size_t, stats::LillieforsTable> tables;
  for (const auto& [n, values] : by_n) {
    if (values.size() < options.min_replicates)
      throw DomainError("CLT report needs at least " + std::to_string(options.min_replicates) +
                        " replicates per n");
    CltRow row;
    row.n = n;
    row.count = values.size();
    const auto m = stats::moments(values);
    row.mean = m.mean;
    row.variance = m.variance;
    row.vnorm = m.variance / box_volume(n, dimension);
    row.skewness = m.skewness;
    row.excess_kurtosis = m.excess_kurtosis;
    const auto z = stats::standardize(values);
    row.ks = stats::ks_statistic_normal(z);
    row.ks_p = stats::kolmogorov_pvalue(row.ks, z.size());
    auto it = tables.find(z.size());
    if (it == tables.end())
      it = tables
               .emplace(z.size(), stats::LillieforsTable(z.size(), options.lilliefors_simulations,
                                                         options.lilliefors_seed))
               .first;
    row.lilliefors_p = it->second.pvalue(row.ks);
    row.lilliefors_crit = it->second.critical_value(options.alpha);
    report.rows.push_back(row);
  }
  return report;
}

stats::Interval sigma2_interval(std::span<const FunctionalRecord> records, int dimension,
                                double coverage) {
  check_homogeneous(records, true);
  std::vector<double> values;
  for (const auto& r : records) values.push_back(r.value);
  const auto m = stats::moments(values);
  const double vol = box_volume(records.front().n, dimension);
  auto ci = stats::variance_interval(m.variance, m.count, coverage);
  return {ci.lower / vol, ci.upper / vol};
}

DecayTable delta_moment_decay(const DecayConfig& config) {
  if (!config.kernel) throw ConfigError("decay experiment needs a kernel");
  if (config.replicates < 2) throw ConfigError("decay experiment needs >= 2 replicates");
  const FieldSampler sampler(config.kernel, config.n, config.epsilon);
  const auto& g = sampler.geometry();
  const int d = g.dimension;
  const int half = static_cast<int>(std::lround(config.n));
  if (config.max_distance >= half)
    throw ConfigError("max_distance must be smaller than n");

  // Unit cubes inside Lambda_n, binned by round(|w|).
  struct Cube {
    std::array<int, 3> w;
    int bin;
    double dist;
  };
  std::vector<Cube> cubes;
  const int zlo = d == 3 ? -half : 0, zhi = d == 3 ? half : 1;
  for (int a = -half; a < half; ++a)
    for (int b = -half; b < half; ++b)
      for (int c = zlo; c < zhi; ++c) {
        const double dist = std::sqrt(double(a) * a + double(b) * b + double(c) * c);
        const int bin = static_cast<int>(std::lround(dist));
        if (bin <= config.max_distance) cubes.push_back({{a, b, c}, bin, dist});
      }
  const auto bins = static_cast<std::size_t>(config.max_distance + 1);
  const double power = 2.0 + config.moment_excess;

  struct PerReplicate {
    std::vector<double> mean_abs, mean_pow, max_abs;
  };
  std::vector<PerReplicate> results(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    const auto f = sampler.sample(config.master_seed, r);
    const std::optional<std::uint64_t> key =
        config.identical_streams ? std::optional<std::uint64_t>(f.provenance().w_key)
                                 : std::nullopt;
    const auto f2 = resample_cube(f, {0, 0, 0}, key);
    const auto lab1 = label_excursion(f, config.level);
    const auto lab2 = label_excursion(f2, config.level);
    PerReplicate out{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0),
                     std::vector<double>(bins, 0.0)};
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& cube : cubes) {
      const double delta = std::abs(mu_vol_cube(lab1, cube.w) - mu_vol_cube(lab2, cube.w));
      out.mean_abs[cube.bin] += delta;
      out.mean_pow[cube.bin] += std::pow(delta, power);
      out.max_abs[cube.bin] = std::max(out.max_abs[cube.bin], delta);
      ++counts[cube.bin];
    }
    for (std::size_t b = 0; b < bins; ++b)
      if (counts[b] > 0) {
        out.mean_abs[b] /= double(counts[b]);
        out.mean_pow[b] /= double(counts[b]);
      }
    results[r] = std::move(out);
  });

  DecayTable table;
  std::vector<double> fit_x, fit_y;
  for (std::size_t b = 0; b < bins; ++b) {
    DecayRow row;
    row.bin = static_cast<int>(b);
    stats::CompensatedSum dist_sum;
    for (const auto& cube : cubes)
      if (cube.bin == row.bin) {
        ++row.cubes;
        dist_sum.add(cube.dist);
      }
    if (row.cubes == 0) continue;
    row.distance = dist_sum.value() / double(row.cubes);
    std::vector<double> abs_values(config.replicates);
    stats::CompensatedSum pow_sum;
    for (std::size_t r = 0; r < config.replicates; ++r) {
      abs_values[r] = results[r].mean_abs[b];
      pow_sum.add(results[r].mean_pow[b]);
      row.max_abs = std::max(row.max_abs, results[r].max_abs[b]);
    }
    const auto m = stats::moments(abs_values);
    row.mean_abs = m.mean;
    row.se = m.standard_error();
    row.mean_pow = pow_sum.value() / double(config.replicates);
    table.max_abs_delta = std::max(table.max_abs_delta, row.max_abs);
    if (row.distance >= config.fit_min && row.distance <= config.fit_max + 0.5) {
      if (row.mean_abs > 0.0) {
        fit_x.push_back(std::log(row.distance));
        fit_y.push_back(std::log(row.mean_abs));
      } else {
        ++table.censored_bins;
      }
    }
    table.rows.push_back(row);
  }
  table.degenerate = table.max_abs_delta == 0.0;
  table.replicate_means.reserve(results.size());
  for (auto& r : results) table.replicate_means.push_back(std::move(r.mean_abs));
  table.fitted_bins = fit_x.size();
  if (!table.degenerate && fit_x.size() >= 2) table.slope = stats::least_squares(fit_x, fit_y).slope;
  return table;
}

ArmDecayTable arm_decay(const ArmDecayConfig& config) {
  if (!config.kernel) throw ConfigError("arm decay experiment needs a kernel");
  if (config.radii.empty()) throw ConfigError("arm decay needs at least one radius");
  for (double m : config.radii)
    if (!(m < config.n)) throw DomainError("arm radius m must be smaller than n");
  const FieldSampler sampler(config.kernel, config.n, config.epsilon);
  std::vector<std::vector<std::uint8_t>> events(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    const auto f = sampler.sample(config.master_seed, r);
    const auto lab = label_excursion(f, config.level);
    std::vector<std::uint8_t> e(config.radii.size());
    for (std::size_t i = 0; i < config.radii.size(); ++i)
      e[i] = arm_event(lab, config.radii[i], config.mode);
    events[r] = std::move(e);
  });

  ArmDecayTable table;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < config.radii.size(); ++i) {
    ArmRow row;
    row.m = config.radii[i];
    row.trials = config.replicates;
    for (const auto& e : events) row.events += e[i];
    row.p_hat = double(row.events) / double(row.trials);
    row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / double(row.trials));
    row.wilson = stats::wilson_interval(row.events, row.trials);
    if (row.events > 0) {
      xs.push_back(row.m);
      ys.push_back(std::log(row.p_hat));
    }
    table.rows.push_back(row);
  }
  table.censored = xs.empty();
  table.events = std::move(events);
  if (xs.size() >= 2) table.slope = stats::least_squares(xs, ys).slope;
  return table;
}

double kac_rice_sa(double lambda2, int dimension, double level) {
  const double d = dimension;
  const double mean_norm =
      std::sqrt(lambda2) * std::numbers::sqrt2 * std::tgamma((d + 1.0) / 2.0) / std::tgamma(d / 2.0);
  return mean_norm * stats::normal_pdf(level);
}

double kac_rice_sa(const KernelSpec& spec, double level) {
  return kac_rice_sa(spectral_second_moment(spec), spec.dimension(), level);
}

double kac_rice_ec(double lambda2, int dimension, double level) {
  if (dimension != 2) throw UnsupportedError("Kac-Rice EC density is implemented for d = 2 only");
  return lambda2 * std::pow(2.0 * std::numbers::pi, -1.5) * level * std::exp(-level * level / 2.0);
}

double kac_rice_ec(const KernelSpec& spec, double level) {
  return kac_rice_ec(spectral_second_moment(spec), spec.dimension(), level);
}

}  // namespace excursion
