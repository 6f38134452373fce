#include "excursion/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "excursion/errors.hpp"
#include "excursion/field.hpp"

namespace excursion {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void allow_keys(const json& obj, const std::string& path, const std::set<std::string>& keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!keys.count(k)) fail(path.empty() ? k : path + "." + k, "unknown key");
}

double get_number(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path + "." + key, "must be finite");
  return x;
}

std::uint64_t get_unsigned(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    fail(path + "." + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> get_number_list(const json& obj, const std::string& key,
                                    const std::string& path) {
  const auto& v = obj.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
  } else {
    fail(path + "." + key, "expected a number or a list of numbers");
  }
  if (out.empty()) fail(path + "." + key, "must not be empty");
  for (double x : out)
    if (!std::isfinite(x)) fail(path + "." + key, "values must be finite");
  return out;
}

std::string get_string(const json& obj, const std::string& key, const std::string& path) {
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "lln") return ExperimentKind::Lln;
  if (s == "clt") return ExperimentKind::Clt;
  if (s == "arm_decay") return ExperimentKind::ArmDecay;
  if (s == "delta_decay") return ExperimentKind::DeltaDecay;
  if (s == "oracle_check") return ExperimentKind::OracleCheck;
  fail("kind", "unknown experiment kind '" + s + "'");
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Lln:
      return "lln";
    case ExperimentKind::Clt:
      return "clt";
    case ExperimentKind::ArmDecay:
      return "arm_decay";
    case ExperimentKind::DeltaDecay:
      return "delta_decay";
    case ExperimentKind::OracleCheck:
      return "oracle_check";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": invalid JSON (" + e.what() + ")");
  }
  allow_keys(doc, "", {"kind", "kernel", "field", "functionals", "levels", "selection", "output",
                       "arm", "decay", "clt", "oracle", "memory_budget_mb"});
  ExperimentConfig c;
  if (!doc.contains("kind")) fail("kind", "required");
  if (!doc["kind"].is_string()) fail("kind", "expected a string");
  c.kind = parse_kind(doc["kind"].get<std::string>());

  if (doc.contains("kernel")) {
    const auto& k = doc["kernel"];
    allow_keys(k, "kernel", {"family", "dimension", "nu", "beta", "k", "tail_tolerance"});
    if (k.contains("family")) {
      try {
        c.kernel.family = parse_kernel_family(get_string(k, "family", "kernel"));
      } catch (const ConfigError& e) {
        fail("kernel.family", e.what());
      }
    }
    if (k.contains("dimension")) c.kernel.dimension = static_cast<int>(get_unsigned(k, "dimension", "kernel"));
    if (k.contains("nu")) c.kernel.nu = get_number(k, "nu", "kernel");
    if (k.contains("beta")) c.kernel.beta = get_number(k, "beta", "kernel");
    if (k.contains("k")) c.kernel.smoothness_k = static_cast<int>(get_unsigned(k, "k", "kernel"));
    if (k.contains("tail_tolerance")) c.tail_tolerance = get_number(k, "tail_tolerance", "kernel");
  } else if (c.kind != ExperimentKind::OracleCheck) {
    fail("kernel", "required");
  }
  if (c.kernel.dimension != 2 && c.kernel.dimension != 3) fail("kernel.dimension", "must be 2 or 3");
  if (c.kernel.family == KernelFamily::Matern && !(c.kernel.nu > 0.0))
    fail("kernel.nu", "matern kernel needs nu > 0");
  if (c.kernel.family == KernelFamily::Rational && !(c.kernel.beta > c.kernel.dimension))
    fail("kernel.beta", "rational kernel needs beta > dimension");
  if (c.kernel.smoothness_k && *c.kernel.smoothness_k < 4) fail("kernel.k", "must be >= 4");
  if (!(c.tail_tolerance > 0.0 && c.tail_tolerance < 1.0)) fail("kernel.tail_tolerance", "must lie in (0, 1)");

  if (doc.contains("field")) {
    const auto& f = doc["field"];
    allow_keys(f, "field", {"n", "epsilon", "spacing", "seed", "replicates"});
    if (f.contains("n")) c.n_values = get_number_list(f, "n", "field");
    if (f.contains("epsilon")) c.epsilon = get_number(f, "epsilon", "field");
    if (f.contains("spacing")) c.spacing = get_number(f, "spacing", "field");
    if (f.contains("seed")) c.seed = get_unsigned(f, "seed", "field");
    if (f.contains("replicates")) c.replicates = get_unsigned(f, "replicates", "field");
  } else if (c.kind != ExperimentKind::OracleCheck) {
    fail("field", "required");
  }
  if (c.replicates < 1) fail("field.replicates", "must be >= 1");
  if (!(c.epsilon >= 0.0)) fail("field.epsilon", "must be >= 0");
  for (double n : c.n_values) {
    try {
      BoxGeometry::make(c.kernel.dimension, c.spacing, n, c.epsilon);
    } catch (const ConfigError& e) {
      fail("field", e.what());
    }
  }

  if (doc.contains("functionals")) {
    const auto& fl = doc["functionals"];
    if (!fl.is_array() || fl.empty()) fail("functionals", "expected a non-empty list");
    c.functionals.clear();
    for (std::size_t i = 0; i < fl.size(); ++i) {
      if (!fl[i].is_string()) fail("functionals[" + std::to_string(i) + "]", "expected a string");
      try {
        c.functionals.push_back(parse_functional(fl[i].get<std::string>()));
      } catch (const ConfigError& e) {
        fail("functionals[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  for (auto f : c.functionals)
    if (f == Functional::SA && c.kernel.dimension != 2)
      fail("functionals", "sa is only available for dimension 2");
  if (doc.contains("levels")) c.levels = get_number_list(doc, "levels", "");
  if (doc.contains("selection")) {
    const auto s = get_string(doc, "selection", "");
    if (s == "finitary")
      c.selection = Selection::Finitary;
    else if (s == "full")
      c.selection = Selection::Full;
    else
      fail("selection", "expected 'finitary' or 'full'");
  }
  if (doc.contains("output")) c.output_dir = get_string(doc, "output", "");

  if (doc.contains("arm")) {
    const auto& a = doc["arm"];
    allow_keys(a, "arm", {"radii", "mode"});
    if (a.contains("radii")) c.arm_radii = get_number_list(a, "radii", "arm");
    if (a.contains("mode")) {
      const auto m = get_string(a, "mode", "arm");
      if (m == "bounded")
        c.arm_mode = ArmMode::Bounded;
      else if (m == "any")
        c.arm_mode = ArmMode::Any;
      else
        fail("arm.mode", "expected 'bounded' or 'any'");
    }
  }
  if (c.kind == ExperimentKind::ArmDecay)
    for (double m : c.arm_radii)
      if (!(m > 0.0 && m < c.n_values.front())) fail("arm.radii", "each radius must lie in (0, n)");

  if (doc.contains("decay")) {
    const auto& d = doc["decay"];
    allow_keys(d, "decay", {"max_distance", "moment_excess", "fit_min", "fit_max"});
    if (d.contains("max_distance")) c.decay_max_distance = static_cast<int>(get_unsigned(d, "max_distance", "decay"));
    if (d.contains("moment_excess")) c.decay_moment_excess = get_number(d, "moment_excess", "decay");
    if (d.contains("fit_min")) c.decay_fit_min = get_number(d, "fit_min", "decay");
    if (d.contains("fit_max")) c.decay_fit_max = get_number(d, "fit_max", "decay");
  }
  if (c.kind == ExperimentKind::DeltaDecay) {
    if (c.decay_max_distance >= c.n_values.front()) fail("decay.max_distance", "must be smaller than n");
    if (c.replicates < 2) fail("field.replicates", "decay experiment needs >= 2 replicates");
    if (!(c.decay_moment_excess > 0.0)) fail("decay.moment_excess", "must be positive");
  }

  if (doc.contains("clt")) {
    const auto& k = doc["clt"];
    allow_keys(k, "clt", {"alpha", "lilliefors_simulations"});
    if (k.contains("alpha")) c.clt_alpha = get_number(k, "alpha", "clt");
    if (k.contains("lilliefors_simulations"))
      c.lilliefors_simulations = static_cast<int>(get_unsigned(k, "lilliefors_simulations", "clt"));
  }
  if (c.kind == ExperimentKind::Clt) {
    std::set<double> distinct(c.n_values.begin(), c.n_values.end());
    if (distinct.size() < 2) fail("field.n", "clt experiment needs at least two distinct n");
    if (c.replicates < 4) fail("field.replicates", "clt experiment needs >= 4 replicates");
    if (c.lilliefors_simulations < 100) fail("clt.lilliefors_simulations", "must be >= 100");
  }

  if (doc.contains("oracle")) {
    const auto& o = doc["oracle"];
    allow_keys(o, "oracle", {"trials", "side"});
    if (o.contains("trials")) c.oracle_trials = static_cast<int>(get_unsigned(o, "trials", "oracle"));
    if (o.contains("side")) c.oracle_side = static_cast<int>(get_unsigned(o, "side", "oracle"));
    if (c.oracle_side < 2 || c.oracle_side % 2 != 0) fail("oracle.side", "must be an even integer >= 2");
  }
  if (doc.contains("memory_budget_mb"))
    c.memory_budget_bytes = 1.0e6 * get_number(doc, "memory_budget_mb", "");

  json canonical = doc;
  canonical.erase("output");
  c.hash = fnv1a_hex(canonical.dump());
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> threshold_warnings(const ExperimentConfig& config) {
  std::vector<std::string> out;
  if (config.kernel.family != KernelFamily::Rational) return out;
  if (!config.kernel.smoothness_k) {
    out.push_back("kernel.k not given; CLT decay thresholds for the rational kernel were not checked");
    return out;
  }
  const int k = *config.kernel.smoothness_k;
  const auto t = beta_thresholds(k, config.kernel.dimension);
  for (auto f : config.functionals) {
    const double need = f == Functional::Vol ? t.vol : f == Functional::EC ? t.ec : t.sa;
    if (!(config.kernel.beta > need)) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "beta = %g does not exceed the %s threshold %g at k = %d; the CLT for %s "
                    "is not covered by theory",
                    config.kernel.beta, to_string(f).c_str(), need, k, to_string(f).c_str());
      out.emplace_back(buf);
    }
  }
  return out;
}

void check_resources(const ExperimentConfig& config, const KernelSpec& kernel) {
  for (double n : config.n_values) {
    const auto g = BoxGeometry::make(config.kernel.dimension, config.spacing, n, config.epsilon);
    const double side = double(g.side()) + 2.0 * kernel.support_sites();
    const double need = FieldSampler::memory_estimate(config.kernel.dimension, static_cast<int>(side));
    if (need > config.memory_budget_bytes) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "n = %g needs about %.0f MB per worker, over the budget of %.0f MB", n,
                    need / 1.0e6, config.memory_budget_bytes / 1.0e6);
      throw ResourceError(buf, need);
    }
  }
}

}  // namespace excursion
