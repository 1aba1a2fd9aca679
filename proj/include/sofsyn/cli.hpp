#pragma once

// Run orchestration and persistence behind the `sofsyn` command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sofsyn/config.hpp"
#include "sofsyn/evolve.hpp"

namespace sofsyn {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumeric = 2 };

struct SynthesisRun {
  std::uint64_t seed = 0;
  RunResult result;
  double wall_seconds = 0.0;
};

struct SynthesisSummary {
  std::vector<SynthesisRun> runs;
  std::size_t best_run = 0;  // index into runs with the lowest best_fitness

  const SynthesisRun& best() const { return runs.at(best_run); }
};

// `generation,best_fitness,k_0,...` with shortest round-trip decimals, LF.
std::string trace_csv(const RunTrace& trace);

// Runs cfg.repetitions searches with seeds evolve.seed, evolve.seed + 1, ...
SynthesisSummary synthesize(const RunConfig& cfg);

nlohmann::ordered_json summary_json(const SynthesisSummary& summary, const OutputConfig& out);

std::filesystem::path trace_path(const OutputConfig& out, std::uint64_t seed);

// Writes every trace CSV and the summary JSON under out.directory.
void write_outputs(const SynthesisSummary& summary, const OutputConfig& out);

// Parses a comma-separated row-major gain for an m×p plant. Throws
// ConfigError on malformed numbers or a wrong entry count.
GainMatrix parse_gain(const std::string& text, std::size_t inputs, std::size_t outputs);

// Per-vertex stability and norms plus the LMI-minimized δ at K.
void analyze(const RunConfig& cfg, const GainMatrix& K, std::ostream& out);

// Full command line entry point. Returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sofsyn
