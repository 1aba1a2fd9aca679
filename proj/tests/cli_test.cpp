#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "sofsyn/cli.hpp"
#include "sofsyn/config.hpp"

using namespace sofsyn;
using namespace sofsyn::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kBenchmarks = fs::path(SOFSYN_SOURCE_DIR) / "benchmarks";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sofsyn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sofsyn_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Example 1 text with one substring replaced.
std::string example1_with(const std::string& from, const std::string& to) {
  std::string text = read_file(kBenchmarks / "example1.json");
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("bundled benchmarks load as the reference plants") {
  const RunConfig e1 = load_config(kBenchmarks / "example1.json");
  CHECK(e1.plant == example1_plant());
  CHECK_FALSE(e1.lmi.gamma);
  CHECK(e1.evolve.NP == 5);
  CHECK(e1.evolve.max_generations == 5);
  CHECK(e1.repetitions == 10);
  CHECK(e1.evolve.chi == 0.72984);

  const RunConfig e2 = load_config(kBenchmarks / "example2.json");
  CHECK(e2.plant == example2_plant());
  CHECK(e2.lmi.gamma == 20.0);
  CHECK_FALSE(e2.lmi.delta_cap);
  CHECK(e2.evolve.max_generations == 10);
}

TEST_CASE("config round trip is lossless") {
  for (const char* name : {"example1.json", "example2.json"}) {
    const RunConfig cfg = load_config(kBenchmarks / name);
    CHECK(parse_config(to_json(cfg).dump()) == cfg);
  }

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    RunConfig cfg;
    cfg.plant = random_plant(rng, 1 + trial % 3, PlantDims{3, 2, 2, 2, 1, 2});
    cfg.plant.vertices[0].A(0, 0) = 0.1;
    cfg.plant.vertices[0].A(0, 1) = 1e-300;
    cfg.plant.vertices[0].A(1, 0) = -2.0 / 3.0;
    cfg.lmi = LmiSpec{1.0 + trial, trial % 2 ? std::optional<double>(50.0) : std::nullopt, 1e-9};
    cfg.evolve.seed = 18446744073709551615ull - trial;
    cfg.evolve.search_box = {{-1.5, 0.25}, {-2, 2}, {0, 1}, {-0.1, 0.3}};
    cfg.evolve.CR = 0.3;
    cfg.output.directory = "x/y";
    cfg.repetitions = 3;
    cfg.notes = {"note"};
    const fs::path dir = scratch_dir("roundtrip");
    save_config(dir / "c.json", cfg);
    CHECK(load_config(dir / "c.json") == cfg);
  }
}

TEST_CASE("config errors name the field") {
  CHECK(config_error_field(example1_with("\"C\": [[0, 1]]", "\"Cm\": [[0, 1]]")) == "plant.Cm");
  CHECK(config_error_field(example1_with(",\n    \"C\": [[0, 1]]", "")) == "plant.C");
  CHECK(config_error_field(example1_with("\"NP\": 5", "\"NP\": 3")) == "evolve.NP");
  CHECK(config_error_field(example1_with("\"NP\": 5", "\"NP\": -5")) == "evolve.NP");
  CHECK(config_error_field(example1_with("\"C\": [[0, 1]]", "\"C\": [[0, 1, 2]]")) == "plant.C");
  CHECK(config_error_field(example1_with("\"A\": [[0, 1], [-1, 0]]", "\"A\": [[0, 1], [-1]]")) ==
        "plant.vertices[0].A[1]");
  CHECK(config_error_field(example1_with("\"strictness_eps\": 1e-7", "\"strictness_eps\": 0")) == "lmi");
  CHECK(config_error_field(example1_with("\"repetitions\": 10", "\"repetitions\": 0")) == "repetitions");
  CHECK(config_error_field(example1_with("[[-10, 10]]", "[[10, -10]]")) == "evolve.search_box");

  const std::string broken = example1_with("\"NP\": 5,", "\"NP\": 5,,");
  try {
    parse_config(broken);
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(e.field().empty());
    CHECK(std::string(e.what()).find("line 27") != std::string::npos);
  }
}

TEST_CASE("trace CSV format") {
  RunTrace t;
  t.records.push_back(GenerationRecord{0, 2.5, GainMatrix(Matrix{{-1.0, 0.1}})});
  t.records.push_back(GenerationRecord{1, 2.449489742783178, GainMatrix(Matrix{{-0.816496580927726, 1e-20}})});
  CHECK(trace_csv(t) ==
        "generation,best_fitness,k_0,k_1\n"
        "0,2.5,-1,0.1\n"
        "1,2.449489742783178,-0.816496580927726,1e-20\n");
}

TEST_CASE("parse_gain") {
  CHECK(parse_gain("-0.8165", 1, 1) == GainMatrix(Matrix{{-0.8165}}));
  CHECK(parse_gain(" 1, +2.5 ,3e-1,4", 2, 2) == GainMatrix(Matrix{{1, 2.5}, {0.3, 4}}));
  CHECK_THROWS_AS(parse_gain("1,2", 1, 1), ConfigError);
  CHECK_THROWS_AS(parse_gain("1,,2", 1, 3), ConfigError);
  CHECK_THROWS_AS(parse_gain("abc", 1, 1), ConfigError);
  CHECK_THROWS_AS(parse_gain("inf", 1, 1), ConfigError);
}

TEST_CASE("analyze reports norms, instability and the LMI cost") {
  const RunConfig e1 = load_config(kBenchmarks / "example1.json");
  std::ostringstream good;
  analyze(e1, GainMatrix(Matrix{{-0.8165}}), good);
  CHECK(good.str().find("vertex 1: stable") != std::string::npos);
  CHECK(good.str().find("H2^2 = 2.4494") != std::string::npos);
  CHECK(good.str().find("LMI delta = 2.449") != std::string::npos);

  std::ostringstream bad;
  analyze(e1, GainMatrix(Matrix{{1.0}}), bad);
  CHECK(bad.str().find("unstable at vertex 1") != std::string::npos);
  CHECK(bad.str().find("LMI infeasible") != std::string::npos);

  const CliResult e2 = cli({"analyze", "--config", (kBenchmarks / "example2.json").string(), "--gain", "2.2422,2.6117"});
  CHECK(e2.code == kExitOk);
  CHECK(e2.out.find("vertex 2: stable") != std::string::npos);
  CHECK(e2.out.find("LMI delta = 94.96") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const std::string e1 = (kBenchmarks / "example1.json").string();
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"analyze", "--config", e1}).code == kExitConfig);
  CHECK(cli({"analyze", "--config", "/nonexistent.json", "--gain", "1"}).code == kExitConfig);
  const CliResult mismatch = cli({"analyze", "--config", e1, "--gain", "1,2"});
  CHECK(mismatch.code == kExitConfig);
  CHECK(mismatch.err.find("gain") != std::string::npos);
  CHECK(cli({"analyze", "--config", e1, "--gain=-1"}).code == kExitOk);
  CHECK(cli({"--help"}).code == kExitOk);

  // Only destabilizing gains in the box: initialization cannot succeed.
  const fs::path dir = scratch_dir("startup");
  std::string text = example1_with("[[-10, 10]]", "[[1, 2]]");
  const auto pos = text.find("\"seed\": 1");
  text.replace(pos, 9, "\"seed\": 1, \"resample_cap\": 3");
  {
    std::ofstream f(dir / "c.json");
    f << text;
  }
  const CliResult startup = cli({"synthesize", "--config", (dir / "c.json").string(), "--out", dir.string()});
  CHECK(startup.code == kExitNumeric);
  CHECK(startup.err.find("startup failure") != std::string::npos);
}

TEST_CASE("synthesize writes traces and a summary, reproducibly") {
  const std::string e1 = (kBenchmarks / "example1.json").string();
  const fs::path a = scratch_dir("synth_a");
  const fs::path b = scratch_dir("synth_b");
  const CliResult ra = cli({"synthesize", "--config", e1, "--seed", "40", "--reps", "3", "--out", a.string()});
  REQUIRE(ra.code == kExitOk);
  CHECK(ra.out.find("best K = [-0.8") != std::string::npos);
  const CliResult rb = cli({"synthesize", "--config", e1, "--seed", "40", "--reps", "3", "--out", b.string()});
  REQUIRE(rb.code == kExitOk);

  const auto summary = nlohmann::json::parse(read_file(a / "summary.json"));
  CHECK(summary["seeds"] == nlohmann::json::array({40, 41, 42}));
  REQUIRE(summary["per_run"].size() == 3);
  double min_delta = 1e300;
  for (const auto& run : summary["per_run"]) min_delta = std::min(min_delta, run["best_delta"].get<double>());
  CHECK(summary["best_delta"].get<double>() == min_delta);

  for (int seed : {40, 41, 42}) {
    const std::string name = "trace_seed" + std::to_string(seed) + ".csv";
    const std::string csv = read_file(a / name);
    CHECK(csv == read_file(b / name));
    CHECK(csv.find('\r') == std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "generation,best_fitness,k_0");
    long previous_gen = -1;
    double previous_fit = 1e300;
    while (std::getline(lines, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      const long gen = std::stol(line.substr(0, c1));
      const double fit = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      CHECK(gen == previous_gen + 1);
      CHECK(fit <= previous_fit);
      previous_gen = gen;
      previous_fit = fit;
    }
    CHECK(previous_gen == 5);
  }
}
