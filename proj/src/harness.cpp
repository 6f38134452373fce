#include "excursion/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "excursion/errors.hpp"
#include "excursion/oracles.hpp"
#include "excursion/parallel.hpp"

namespace excursion {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

json record_json(const RunRecord& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["replicate"] = r.replicate;
  j["wall_seconds"] = r.wall_seconds;
  j["version"] = r.version;
  json values = json::array();
  for (const auto& f : r.functionals)
    values.push_back({{"star", to_string(f.star)}, {"level", f.level}, {"n", f.n},
                      {"epsilon", f.epsilon}, {"value", f.value}});
  j["functionals"] = values;
  json scalars = json::object();
  for (const auto& [k, v] : r.scalars) scalars[k] = v;
  j["scalars"] = scalars;
  return j;
}

std::vector<RunRecord> run_functionals(const ExperimentConfig& config,
                                       const std::shared_ptr<const KernelSpec>& kernel,
                                       unsigned threads) {
  std::vector<std::unique_ptr<FieldSampler>> samplers;
  for (double n : config.n_values)
    samplers.push_back(std::make_unique<FieldSampler>(kernel, n, config.epsilon,
                                                      config.memory_budget_bytes));
  std::vector<RunRecord> records(config.replicates);
  parallel_for(config.replicates, threads, [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config_hash = config.hash;
    rec.replicate = r;
    for (const auto& sampler : samplers) {
      const auto field = sampler->sample(config.seed, r);
      auto values = measure_functionals(field, config.levels, config.functionals, config.selection);
      rec.functionals.insert(rec.functionals.end(), values.begin(), values.end());
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    records[r] = std::move(rec);
  });
  return records;
}

std::vector<FunctionalRecord> select(const std::vector<FunctionalRecord>& all, Functional star,
                                     double level, std::optional<double> n = std::nullopt) {
  std::vector<FunctionalRecord> out;
  for (const auto& r : all)
    if (r.star == star && r.level == level && (!n || r.n == *n)) out.push_back(r);
  return out;
}

// Minimal CSV reader: header plus rows of comma-separated fields.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("CSV has no column '" + name + "'");
  }
};

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (csv.header.empty())
      csv.header = split(line);
    else
      csv.rows.push_back(split(line));
  }
  if (csv.header.empty()) throw ConfigError("empty CSV input");
  return csv;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not a number in CSV: '" + s + "'");
  }
}

}  // namespace

unsigned default_thread_count() {
  if (const char* env = std::getenv("EXCURSION_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string records_csv(const std::vector<FunctionalRecord>& records) {
  std::string out = "star,level,n,epsilon,replicate,value\n";
  for (const auto& r : records) {
    out += to_string(r.star) + ',' + format_number(r.level) + ',' + format_number(r.n) + ',' +
           format_number(r.epsilon) + ',' + std::to_string(r.replicate) + ',' +
           format_number(r.value) + '\n';
  }
  return out;
}

std::string clt_csv(const CltReport& report) {
  std::string out = "n,mean,var,vnorm,skew,kurt,ks,ks_p\n";
  for (const auto& row : report.rows)
    out += format_number(row.n) + ',' + format_number(row.mean) + ',' +
           format_number(row.variance) + ',' + format_number(row.vnorm) + ',' +
           format_number(row.skewness) + ',' + format_number(row.excess_kurtosis) + ',' +
           format_number(row.ks) + ',' + format_number(row.ks_p) + '\n';
  return out;
}

std::string decay_csv(const DecayTable& table) {
  std::string out = "distance,mean_abs,mean_pow,se\n";
  for (const auto& row : table.rows)
    out += format_number(row.distance) + ',' + format_number(row.mean_abs) + ',' +
           format_number(row.mean_pow) + ',' + format_number(row.se) + '\n';
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const fs::path out_dir = options.output_dir.empty() ? config.output_dir : options.output_dir;
  fs::create_directories(out_dir);
  const unsigned threads = std::max(1u, options.threads);

  ExperimentResult result;
  result.warnings = threshold_warnings(config);
  if (!options.quiet)
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  json summary;
  summary["config_hash"] = config.hash;
  summary["version"] = kLibraryVersion;
  summary["kind"] = to_string(config.kind);
  summary["timestamp"] = timestamp();
  summary["warnings"] = result.warnings;

  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(out_dir / name, content);
    result.files.push_back(name);
  };

  if (config.kind == ExperimentKind::OracleCheck) {
    const auto suite = oracle::run_mask_suite(config.oracle_trials, config.oracle_side, config.seed);
    result.passed = suite.passed();
    emit("oracle.csv", "check,trials,passed\nlabels," + std::to_string(suite.trials) + ',' +
                           std::to_string(suite.label_matches) + "\neuler," +
                           std::to_string(suite.trials) + ',' +
                           std::to_string(suite.euler_matches) + '\n');
    summary["oracle"] = {{"trials", suite.trials},
                         {"label_matches", suite.label_matches},
                         {"euler_matches", suite.euler_matches},
                         {"passed", suite.passed()}};
    write_file(out_dir / "summary.json", summary.dump(2) + "\n");
    result.files.push_back("summary.json");
    return result;
  }

  const auto kernel = std::make_shared<const KernelSpec>(
      KernelSpec::build(config.kernel, config.spacing, config.tail_tolerance));
  check_resources(config, *kernel);
  summary["kernel"] = {{"family", to_string(kernel->family())},
                       {"dimension", kernel->dimension()},
                       {"spacing", kernel->spacing()},
                       {"truncation_radius", kernel->truncation_radius()},
                       {"normalization", kernel->normalization()},
                       {"tail_mass", kernel->tail_mass()}};
  const int d = config.kernel.dimension;

  switch (config.kind) {
    case ExperimentKind::Lln:
    case ExperimentKind::Clt: {
      result.records = run_functionals(config, kernel, threads);
      std::vector<FunctionalRecord> all;
      for (const auto& r : result.records)
        all.insert(all.end(), r.functionals.begin(), r.functionals.end());
      emit("records.csv", records_csv(all));
      if (config.kind == ExperimentKind::Lln) {
        std::string lln = "star,level,n,epsilon,mean,se\n";
        json estimates = json::array();
        for (double n : config.n_values)
          for (double level : config.levels)
            for (auto star : config.functionals) {
              const auto subset = select(all, star, level, n);
              if (subset.size() < 2) continue;
              const auto est = estimate_c_star(subset, d);
              lln += to_string(star) + ',' + format_number(level) + ',' + format_number(n) + ',' +
                     format_number(config.epsilon) + ',' + format_number(est.mean) + ',' +
                     format_number(est.se) + '\n';
              const auto ci = sigma2_interval(subset, d);
              estimates.push_back({{"star", to_string(star)},
                                   {"level", level},
                                   {"n", n},
                                   {"mean", est.mean},
                                   {"se", est.se},
                                   {"sigma2_lower", ci.lower},
                                   {"sigma2_upper", ci.upper}});
            }
        emit("lln.csv", lln);
        summary["lln"] = estimates;
      } else {
        CltOptions opts;
        opts.alpha = config.clt_alpha;
        opts.lilliefors_simulations = config.lilliefors_simulations;
        opts.min_replicates = std::min<std::size_t>(opts.min_replicates, config.replicates);
        json reports = json::array();
        for (std::size_t li = 0; li < config.levels.size(); ++li)
          for (auto star : config.functionals) {
            const auto report = clt_report(select(all, star, config.levels[li]), d, opts);
            const std::string name = "clt_" + to_string(star) + "_L" + std::to_string(li) + ".csv";
            emit(name, clt_csv(report));
            json rows = json::array();
            for (const auto& row : report.rows)
              rows.push_back({{"n", row.n},
                              {"lilliefors_p", row.lilliefors_p},
                              {"lilliefors_critical", row.lilliefors_crit},
                              {"rejects_normality", row.ks > row.lilliefors_crit}});
            reports.push_back({{"file", name},
                               {"star", to_string(star)},
                               {"level", config.levels[li]},
                               {"alpha", report.alpha},
                               {"rows", rows}});
          }
        summary["clt"] = reports;
      }
      break;
    }
    case ExperimentKind::ArmDecay: {
      ArmDecayConfig ac;
      ac.kernel = kernel;
      ac.n = config.n_values.front();
      ac.epsilon = config.epsilon;
      ac.level = config.levels.front();
      ac.master_seed = config.seed;
      ac.replicates = config.replicates;
      ac.radii = config.arm_radii;
      ac.mode = config.arm_mode;
      ac.threads = threads;
      const auto start = std::chrono::steady_clock::now();
      const auto table = arm_decay(ac);
      const double per = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count() / double(config.replicates);
      std::string csv = "m,p_hat,se,wilson_lo,wilson_hi,events,trials\n";
      for (const auto& row : table.rows)
        csv += format_number(row.m) + ',' + format_number(row.p_hat) + ',' +
               format_number(row.se) + ',' + format_number(row.wilson.lower) + ',' +
               format_number(row.wilson.upper) + ',' + std::to_string(row.events) + ',' +
               std::to_string(row.trials) + '\n';
      emit("arm.csv", csv);
      for (std::size_t r = 0; r < table.events.size(); ++r) {
        RunRecord rec;
        rec.config_hash = config.hash;
        rec.replicate = r;
        rec.wall_seconds = per;
        for (std::size_t i = 0; i < config.arm_radii.size(); ++i)
          rec.scalars.emplace_back("arm_m" + format_number(config.arm_radii[i]),
                                   table.events[r][i]);
        result.records.push_back(std::move(rec));
      }
      summary["arm"] = {{"level", ac.level},
                        {"censored", table.censored},
                        {"slope", table.slope ? json(*table.slope) : json(nullptr)}};
      break;
    }
    case ExperimentKind::DeltaDecay: {
      DecayConfig dc;
      dc.kernel = kernel;
      dc.n = config.n_values.front();
      dc.epsilon = config.epsilon;
      dc.level = config.levels.front();
      dc.master_seed = config.seed;
      dc.replicates = config.replicates;
      dc.max_distance = config.decay_max_distance;
      dc.moment_excess = config.decay_moment_excess;
      dc.fit_min = config.decay_fit_min;
      dc.fit_max = config.decay_fit_max;
      dc.threads = threads;
      const auto start = std::chrono::steady_clock::now();
      const auto table = delta_moment_decay(dc);
      const double per = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count() / double(config.replicates);
      emit("decay.csv", decay_csv(table));
      for (std::size_t r = 0; r < table.replicate_means.size(); ++r) {
        RunRecord rec;
        rec.config_hash = config.hash;
        rec.replicate = r;
        rec.wall_seconds = per;
        for (std::size_t b = 0; b < table.replicate_means[r].size(); ++b)
          rec.scalars.emplace_back("delta_bin" + std::to_string(b), table.replicate_means[r][b]);
        result.records.push_back(std::move(rec));
      }
      summary["decay"] = {{"level", dc.level},
                          {"degenerate", table.degenerate},
                          {"max_abs_delta", table.max_abs_delta},
                          {"fitted_bins", table.fitted_bins},
                          {"censored_bins", table.censored_bins},
                          {"slope", table.slope ? json(*table.slope) : json(nullptr)}};
      break;
    }
    case ExperimentKind::OracleCheck:
      break;
  }

  json runs = json::array();
  for (const auto& r : result.records) runs.push_back(record_json(r));
  write_file(out_dir / "run_records.json", runs.dump(1) + "\n");
  result.files.push_back("run_records.json");
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  result.files.push_back("summary.json");
  return result;
}

std::string plot_data(const std::string& csv_text, PlotKind kind, int dimension) {
  const Csv csv = parse_csv(csv_text);
  std::ostringstream out;
  if (kind == PlotKind::Decay) {
    const auto cd = csv.column("distance"), cm = csv.column("mean_abs"), cs = csv.column("se");
    out << "# log(distance)\tlog(mean_abs)\tdistance\tmean_abs\tse\n";
    for (const auto& row : csv.rows) {
      const double dist = to_double(row.at(cd)), mean = to_double(row.at(cm));
      if (mean <= 0.0 || dist <= 0.0) continue;
      out << format_number(std::log(dist)) << '\t' << format_number(std::log(mean)) << '\t'
          << format_number(dist) << '\t' << format_number(mean) << '\t'
          << format_number(to_double(row.at(cs))) << '\n';
    }
    return out.str();
  }

  const auto cstar = csv.column("star"), clevel = csv.column("level"), cn = csv.column("n"),
             cvalue = csv.column("value");
  // (star, n) -> level -> values, and (star, level) -> n -> values
  std::map<std::pair<std::string, double>, std::map<double, std::vector<double>>> groups;
  for (const auto& row : csv.rows) {
    const double level = to_double(row.at(clevel)), n = to_double(row.at(cn));
    const double value = to_double(row.at(cvalue));
    if (kind == PlotKind::Lln)
      groups[{row.at(cstar), n}][level].push_back(value / std::pow(2.0 * n, dimension));
    else
      groups[{row.at(cstar), level}][n].push_back(value);
  }
  bool first = true;
  for (const auto& [key, series] : groups) {
    if (!first) out << "\n\n";
    first = false;
    if (kind == PlotKind::Lln) {
      out << "# star=" << key.first << " n=" << format_number(key.second) << '\n';
      out << "# level\tmean\tse\n";
      for (const auto& [level, values] : series) {
        const auto m = stats::moments(values);
        out << format_number(level) << '\t' << format_number(m.mean) << '\t'
            << format_number(m.standard_error()) << '\n';
      }
    } else {
      out << "# star=" << key.first << " level=" << format_number(key.second) << '\n';
      out << "# n\tvnorm\tskew\tkurt\n";
      for (const auto& [n, values] : series) {
        const auto m = stats::moments(values);
        out << format_number(n) << '\t' << format_number(m.variance / std::pow(2.0 * n, dimension))
            << '\t' << format_number(m.skewness) << '\t' << format_number(m.excess_kurtosis)
            << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace excursion
