// excursion-lab: run excursion-set experiments from a JSON config.
//
//   excursion-lab run <config.json> [--threads N] [--out DIR]
//   excursion-lab oracle-check [--trials N] [--side S] [--seed S]
//   excursion-lab plot-data <file.csv> --kind {lln|clt|decay}
//
// Exit codes: 0 success, 1 failed check or runtime error, 2 invalid config,
// 3 resource budget exceeded.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "excursion/errors.hpp"
#include "excursion/harness.hpp"
#include "excursion/oracles.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw excursion::ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excursion-set geometry experiments for Gaussian fields"};
  app.require_subcommand(1);

  std::string config_path;
  unsigned threads = excursion::default_thread_count();
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment JSON")->required();
  run->add_option("--threads", threads, "Worker threads (default: $EXCURSION_LAB_THREADS)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  int trials = 10000;
  int side = 8;
  std::uint64_t seed = 20240601;
  auto* oracle = app.add_subcommand("oracle-check", "Check labeling and EC against brute force");
  oracle->add_option("--trials", trials, "Number of random masks")->check(CLI::PositiveNumber);
  oracle->add_option("--side", side, "Mask side length (even)");
  oracle->add_option("--seed", seed, "Mask generator seed");

  std::string csv_path;
  std::string kind = "lln";
  int dimension = 2;
  auto* plot = app.add_subcommand("plot-data", "Emit gnuplot-ready TSV from a CSV output");
  plot->add_option("csv", csv_path, "records.csv or decay.csv")->required();
  plot->add_option("--kind", kind, "lln, clt or decay")
      ->required()
      ->check(CLI::IsMember({"lln", "clt", "decay"}));
  plot->add_option("--dimension", dimension, "Field dimension for normalization");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const auto config = excursion::load_config(config_path);
      excursion::RunOptions options;
      options.threads = threads;
      options.output_dir = out_dir;
      const auto result = excursion::run_experiment(config, options);
      for (const auto& f : result.files) std::cout << f << '\n';
      return result.passed ? 0 : 1;
    }
    if (*oracle) {
      if (side < 2 || side % 2 != 0) throw excursion::ConfigError("--side must be an even integer >= 2");
      const auto r = excursion::oracle::run_mask_suite(trials, side, seed);
      std::cout << "labels " << r.label_matches << "/" << r.trials << "\n"
                << "euler  " << r.euler_matches << "/" << r.trials << "\n"
                << (r.passed() ? "PASS" : "FAIL") << '\n';
      return r.passed() ? 0 : 1;
    }
    if (*plot) {
      const auto k = kind == "lln"   ? excursion::PlotKind::Lln
                     : kind == "clt" ? excursion::PlotKind::Clt
                                     : excursion::PlotKind::Decay;
      std::cout << excursion::plot_data(read_file(csv_path), k, dimension);
      return 0;
    }
  } catch (const excursion::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const excursion::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
