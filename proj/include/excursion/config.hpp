#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "excursion/estimators.hpp"
#include "excursion/geometry.hpp"
#include "excursion/kernels.hpp"

namespace excursion {

enum class ExperimentKind { Lln, Clt, ArmDecay, DeltaDecay, OracleCheck };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Lln;

  KernelParams kernel;
  double tail_tolerance = KernelSpec::kDefaultTailTolerance;

  std::vector<double> n_values{16.0};
  double epsilon = 0.25;
  double spacing = 0.25;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;

  std::vector<Functional> functionals{Functional::Vol};
  std::vector<double> levels{-0.5};
  Selection selection = Selection::Finitary;
  std::string output_dir = "out";

  // arm_decay
  std::vector<double> arm_radii{2.0, 4.0, 8.0};
  ArmMode arm_mode = ArmMode::Bounded;

  // delta_decay
  int decay_max_distance = 10;
  double decay_moment_excess = 0.5;
  double decay_fit_min = 2.0;
  double decay_fit_max = 10.0;

  // clt
  double clt_alpha = 0.01;
  int lilliefors_simulations = 2000;

  // oracle_check
  int oracle_trials = 10000;
  int oracle_side = 8;

  double memory_budget_bytes = 4.0e9;

  // FNV-1a of the canonical (key-sorted) JSON without the output key.
  std::string hash;
};

// Parses and validates a config document. Errors are ConfigError with a
// "path: message" diagnostic (JSON syntax errors carry line and column).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Human-readable warnings for functionals whose CLT needs a faster kernel
// decay than configured.
std::vector<std::string> threshold_warnings(const ExperimentConfig& config);

// Throws ResourceError when any configured box exceeds the memory budget.
void check_resources(const ExperimentConfig& config, const KernelSpec& kernel);

}  // namespace excursion
