#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "excursion/config.hpp"
#include "excursion/errors.hpp"
#include "excursion/harness.hpp"
#include "excursion/rng.hpp"

using namespace excursion;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("excursion-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kLlnConfig = R"({
  "kind": "lln",
  "kernel": {"family": "bargmann_fock", "dimension": 2},
  "field": {"n": [4, 6], "epsilon": 0.25, "spacing": 0.25, "seed": 42, "replicates": 6},
  "functionals": ["vol", "sa", "ec"],
  "levels": [-0.5, 0.5],
  "selection": "finitary"
})";

ExperimentResult run_in(const ExperimentConfig& config, const fs::path& dir, unsigned threads) {
  RunOptions opts;
  opts.threads = threads;
  opts.output_dir = dir.string();
  opts.quiet = true;
  return run_experiment(config, opts);
}

void check_same_csvs(const fs::path& a, const fs::path& b) {
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared > 0);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EXCURSION_LAB_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("derived seeds are deterministic and collision-free") {
  CHECK(derive_seed(7, 3, NoiseStream::W) == derive_seed(7, 3, NoiseStream::W));
  CHECK(derive_seed(7, 3, NoiseStream::W) != derive_seed(7, 3, NoiseStream::Wprime));
  CHECK(derive_seed(7, 3, NoiseStream::W) != derive_seed(8, 3, NoiseStream::W));
  std::vector<std::uint64_t> seeds;
  seeds.reserve(1000000);
  for (std::uint64_t r = 0; r < 500000; ++r) {
    seeds.push_back(derive_seed(20240601, r, NoiseStream::W));
    seeds.push_back(derive_seed(20240601, r, NoiseStream::Wprime));
  }
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("config parsing") {
  const auto c = parse_config(kLlnConfig);
  CHECK(c.kind == ExperimentKind::Lln);
  CHECK(c.n_values == std::vector<double>{4.0, 6.0});
  CHECK(c.replicates == 6);
  CHECK(c.functionals.size() == 3);
  CHECK(c.selection == Selection::Finitary);
  CHECK_FALSE(c.hash.empty());

  const auto scalar_n = parse_config(R"({"kind": "lln", "kernel": {"family": "matern", "nu": 3},
      "field": {"n": 8}})");
  CHECK(scalar_n.n_values == std::vector<double>{8.0});
  CHECK(scalar_n.kernel.family == KernelFamily::Matern);
}

TEST_CASE("config errors name the offending key") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const auto unknown = message(R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
      "field": {"n": 4, "sede": 3}})");
  CHECK(unknown.find("field") != std::string::npos);
  CHECK(unknown.find("sede") != std::string::npos);

  const auto syntax = message("{\n  \"kind\": \"lln\",\n  \"kernel\": {,\n}");
  CHECK(syntax.find("line 3") != std::string::npos);

  CHECK(message(R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
      "field": {"n": 4, "spacing": 0.3}})")
            .find("spacing") != std::string::npos);
  CHECK(message(R"({"kind": "lln", "kernel": {"family": "bargmann_fock", "dimension": 3},
      "field": {"n": 4, "spacing": 0.5}, "functionals": ["sa"]})")
            .find("functionals") != std::string::npos);
  CHECK(message(R"({"kind": "lln", "field": {"n": 4}})").find("kernel") != std::string::npos);
  CHECK(message(R"({"kind": "bogus", "kernel": {"family": "bargmann_fock"}, "field": {"n": 4}})")
            .find("kind") != std::string::npos);
  CHECK(message(R"({"kind": "lln", "kernel": {"family": "rational", "beta": 1.0},
      "field": {"n": 4}})") != "no error");
}

TEST_CASE("config hash ignores key order and the output directory") {
  const auto a = parse_config(R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
      "field": {"n": 4, "seed": 3}, "output": "x"})");
  const auto b = parse_config(R"({"field": {"seed": 3, "n": 4}, "output": "y",
      "kernel": {"family": "bargmann_fock"}, "kind": "lln"})");
  const auto c = parse_config(R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
      "field": {"n": 4, "seed": 4}})");
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
}

TEST_CASE("threshold warnings for slowly decaying kernels") {
  auto c = parse_config(R"({"kind": "clt", "kernel": {"family": "rational", "beta": 7, "k": 4},
      "field": {"n": [4, 8]}, "functionals": ["vol", "ec"]})");
  const auto w = threshold_warnings(c);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("ec") != std::string::npos);
  CHECK(w[0].find("18") != std::string::npos);

  c = parse_config(R"({"kind": "clt", "kernel": {"family": "rational", "beta": 20, "k": 4},
      "field": {"n": [4, 8]}, "functionals": ["vol", "sa", "ec"]})");
  const auto w2 = threshold_warnings(c);
  REQUIRE(w2.size() == 1);
  CHECK(w2[0].find("sa") != std::string::npos);

  c = parse_config(R"({"kind": "clt", "kernel": {"family": "bargmann_fock"},
      "field": {"n": [4, 8]}, "functionals": ["vol", "sa", "ec"]})");
  CHECK(threshold_warnings(c).empty());
}

TEST_CASE("lln run writes deterministic outputs") {
  const auto config = parse_config(kLlnConfig);
  const auto d1 = scratch_dir("lln-1");
  const auto d2 = scratch_dir("lln-2");
  const auto d8 = scratch_dir("lln-8");
  const auto r1 = run_in(config, d1, 1);
  run_in(config, d2, 1);
  run_in(config, d8, 8);
  CHECK(r1.records.size() == 6);  // one per replicate, covering both box sizes
  CHECK(r1.records[0].config_hash == config.hash);
  CHECK(r1.records[0].version == kLibraryVersion);
  CHECK(r1.records[0].functionals.size() == 12);  // 2 n x 2 levels x 3 functionals
  check_same_csvs(d1, d2);
  check_same_csvs(d1, d8);
  CHECK(fs::exists(d1 / "summary.json"));
  CHECK(fs::exists(d1 / "run_records.json"));
  const auto records = slurp(d1 / "records.csv");
  CHECK(records.rfind("star,level,n,epsilon,replicate,value\n", 0) == 0);
  CHECK(std::count(records.begin(), records.end(), '\n') == 1 + 12 * 6);
  CHECK(slurp(d1 / "lln.csv").rfind("star,level,n,epsilon,mean,se\n", 0) == 0);

  const auto plot = plot_data(records, PlotKind::Lln, 2);
  CHECK(plot.find("vol") != std::string::npos);
  CHECK_THROWS_AS(plot_data("bad,header\n1,2\n", PlotKind::Lln, 2), ConfigError);
}

TEST_CASE("clt, arm and decay runs are deterministic across thread counts") {
  const std::vector<std::string> configs{
      R"({"kind": "clt", "kernel": {"family": "bargmann_fock"},
          "field": {"n": [2, 3], "seed": 5, "replicates": 100},
          "functionals": ["vol", "ec"], "levels": [-0.5],
          "clt": {"lilliefors_simulations": 200}})",
      R"({"kind": "arm_decay", "kernel": {"family": "bargmann_fock"},
          "field": {"n": 5, "seed": 6, "replicates": 40}, "levels": [-0.5],
          "arm": {"radii": [2, 4], "mode": "bounded"}})",
      R"({"kind": "delta_decay", "kernel": {"family": "rational", "beta": 7, "k": 4},
          "field": {"n": 6, "seed": 7, "replicates": 8}, "levels": [-0.5],
          "decay": {"max_distance": 5, "fit_min": 2, "fit_max": 5}})"};
  int i = 0;
  for (const auto& text : configs) {
    const auto config = parse_config(text);
    const auto a = scratch_dir("kind-" + std::to_string(i) + "-1");
    const auto b = scratch_dir("kind-" + std::to_string(i) + "-8");
    const auto ra = run_in(config, a, 1);
    run_in(config, b, 8);
    CHECK(ra.records.size() == config.replicates);
    check_same_csvs(a, b);
    ++i;
  }
  CHECK(fs::exists(fs::temp_directory_path() / "excursion-test-kind-0-1" / "clt_vol_L0.csv"));
  CHECK(fs::exists(fs::temp_directory_path() / "excursion-test-kind-1-1" / "arm.csv"));
  const auto decay = fs::temp_directory_path() / "excursion-test-kind-2-1" / "decay.csv";
  REQUIRE(fs::exists(decay));
  CHECK(slurp(decay).rfind("distance,mean_abs,mean_pow,se\n", 0) == 0);
  CHECK_FALSE(plot_data(slurp(decay), PlotKind::Decay, 2).empty());
}

TEST_CASE("resource budget and oracle check runs") {
  const auto big = parse_config(R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
      "field": {"n": 512, "replicates": 1}, "memory_budget_mb": 1})");
  CHECK_THROWS_AS(run_in(big, scratch_dir("big"), 1), ResourceError);

  const auto oracle = parse_config(R"({"kind": "oracle_check",
      "kernel": {"family": "bargmann_fock"}, "field": {"n": 4},
      "oracle": {"trials": 300, "side": 8}})");
  const auto dir = scratch_dir("oracle");
  const auto r = run_in(oracle, dir, 1);
  CHECK(r.passed);
  CHECK(fs::exists(dir / "oracle.csv"));
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch_dir("cli");
  {
    std::ofstream(dir / "good.json") << R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
        "field": {"n": 2, "replicates": 2}, "output": ")"
                                     << (dir / "out").string() << "\"}";
    std::ofstream(dir / "bad.json") << R"({"kind": "lln", "kernel": {"family": "nope"}})";
    std::ofstream(dir / "huge.json") << R"({"kind": "lln", "kernel": {"family": "bargmann_fock"},
        "field": {"n": 512, "replicates": 1}, "memory_budget_mb": 1})";
  }
  CHECK(run_cli("run " + (dir / "good.json").string() + " --threads 2") == 0);
  CHECK(fs::exists(dir / "out" / "records.csv"));
  CHECK(run_cli("run " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("run " + (dir / "huge.json").string()) == 3);
  CHECK(run_cli("plot-data " + (dir / "out" / "records.csv").string() + " --kind lln") == 0);
  CHECK(run_cli("oracle-check --trials 100") == 0);
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("shipped sample configs parse") {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(EXCURSION_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
    ++count;
  }
  CHECK(count >= 5);
}
