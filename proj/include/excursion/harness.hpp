#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "excursion/config.hpp"
#include "excursion/estimators.hpp"

namespace excursion {

inline constexpr const char* kLibraryVersion = "0.1.0";

// One replicate's outputs. For lln/clt these are functional records; arm
// and decay experiments store their per-replicate indicators and bin means
// under synthetic names in `scalars`.
struct RunRecord {
  std::string config_hash;
  std::uint64_t replicate = 0;
  std::vector<FunctionalRecord> functionals;
  std::vector<std::pair<std::string, double>> scalars;
  double wall_seconds = 0.0;
  std::string version = kLibraryVersion;
};

struct RunOptions {
  unsigned threads = 1;
  std::string output_dir;  // overrides the config's output when non-empty
  bool quiet = false;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // ordered by replicate
  std::vector<std::string> warnings;
  std::vector<std::string> files;  // written paths, relative to the output dir
  bool passed = true;              // oracle_check only
};

// Runs the configured experiment and writes CSV summaries plus the JSON
// sidecars summary.json and run_records.json into the output directory.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Thread count from EXCURSION_LAB_THREADS, falling back to the hardware.
unsigned default_thread_count();

// Shortest round-trip decimal form, used for every CSV number.
std::string format_number(double x);

// CSV writers with the fixed headers consumed by downstream tools.
std::string records_csv(const std::vector<FunctionalRecord>& records);
std::string clt_csv(const CltReport& report);
std::string decay_csv(const DecayTable& table);

enum class PlotKind { Lln, Clt, Decay };

// Reads a records or decay CSV and emits gnuplot-ready TSV blocks.
std::string plot_data(const std::string& csv_text, PlotKind kind, int dimension = 2);

}  // namespace excursion
