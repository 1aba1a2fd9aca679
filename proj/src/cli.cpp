#include "sofsyn/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "sofsyn/errors.hpp"
#include "sofsyn/oracle.hpp"

namespace sofsyn {
namespace {

using Json = nlohmann::ordered_json;

std::shared_ptr<spdlog::logger> logger() {
  static const std::shared_ptr<spdlog::logger> log = spdlog::stderr_logger_mt("sofsyn");
  return log;
}

void configure_logging(std::ostream& err) {
  const char* env = std::getenv("SOFSYN_LOG");
  const std::string level = env ? env : "info";
  if (level == "off") {
    logger()->set_level(spdlog::level::off);
  } else if (level == "debug") {
    logger()->set_level(spdlog::level::debug);
  } else {
    if (level != "info") err << "SOFSYN_LOG=" << level << " not recognized (off|info|debug); using info\n";
    logger()->set_level(spdlog::level::info);
  }
}

void append_number(std::string& s, double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, end);
}

std::string gain_text(const GainMatrix& k) {
  std::string s = "[";
  for (std::size_t r = 0; r < k.inputs(); ++r) {
    if (r > 0) s += "; ";
    for (std::size_t c = 0; c < k.outputs(); ++c) {
      if (c > 0) s += ", ";
      append_number(s, k.matrix()(r, c));
    }
  }
  return s + "]";
}

}  // namespace

std::string trace_csv(const RunTrace& trace) {
  std::string s = "generation,best_fitness";
  const std::size_t d = trace.records.empty() ? 0 : trace.records.front().best.dimension();
  for (std::size_t j = 0; j < d; ++j) s += ",k_" + std::to_string(j);
  s += '\n';
  for (const GenerationRecord& rec : trace.records) {
    s += std::to_string(rec.generation);
    s += ',';
    append_number(s, rec.best_fitness);
    for (double k : rec.best.flat()) {
      s += ',';
      append_number(s, k);
    }
    s += '\n';
  }
  return s;
}

SynthesisSummary synthesize(const RunConfig& cfg) {
  SynthesisSummary summary;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    EvolveConfig ev = cfg.evolve;
    ev.seed = cfg.evolve.seed + rep;
    Callbacks cb;
    cb.on_generation = [&](const GenerationRecord& rec) {
      logger()->debug("seed {} generation {}: best δ {} at K = {} ({} fitness calls)", ev.seed, rec.generation,
                      rec.best_fitness, gain_text(rec.best), rec.fitness_calls);
    };
    const auto t0 = std::chrono::steady_clock::now();
    SynthesisRun run_record{ev.seed, run(cfg.plant, cfg.lmi, ev, cb), 0.0};
    run_record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    logger()->info("seed {}: δ = {} at K = {} in {:.2f} s", ev.seed, run_record.result.best_fitness,
                   gain_text(run_record.result.best), run_record.wall_seconds);
    summary.runs.push_back(std::move(run_record));
    if (summary.runs.back().result.best_fitness < summary.best().result.best_fitness)
      summary.best_run = summary.runs.size() - 1;
  }
  return summary;
}

std::filesystem::path trace_path(const OutputConfig& out, std::uint64_t seed) {
  return std::filesystem::path(out.directory) / (out.trace_prefix + "_seed" + std::to_string(seed) + ".csv");
}

Json summary_json(const SynthesisSummary& summary, const OutputConfig& out) {
  Json seeds = Json::array();
  Json per_run = Json::array();
  for (const SynthesisRun& r : summary.runs) {
    seeds.push_back(r.seed);
    per_run.push_back(Json{{"seed", r.seed},
                           {"best_delta", r.result.best_fitness},
                           {"best_gain", matrix_to_json(r.result.best.matrix())},
                           {"generations", r.result.trace.records.back().generation},
                           {"fitness_calls", r.result.trace.records.back().fitness_calls},
                           {"wall_seconds", r.wall_seconds},
                           {"trace", trace_path(out, r.seed).filename().string()}});
  }
  return Json{{"best_gain", matrix_to_json(summary.best().result.best.matrix())},
              {"best_delta", summary.best().result.best_fitness},
              {"seeds", std::move(seeds)},
              {"per_run", std::move(per_run)}};
}

void write_outputs(const SynthesisSummary& summary, const OutputConfig& out) {
  std::filesystem::create_directories(out.directory);
  for (const SynthesisRun& r : summary.runs) {
    std::ofstream f(trace_path(out, r.seed), std::ios::binary);
    f << trace_csv(r.result.trace);
    if (!f) throw std::runtime_error("cannot write " + trace_path(out, r.seed).string());
  }
  const auto path = std::filesystem::path(out.directory) / out.summary;
  std::ofstream f(path, std::ios::binary);
  f << summary_json(summary, out).dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

GainMatrix parse_gain(const std::string& text, std::size_t inputs, std::size_t outputs) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, end - start);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? "" : item.substr(first, last - first + 1);
    if (!item.empty() && item.front() == '+') item.erase(0, 1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(x))
      throw ConfigError("gain", "'" + item + "' is not a finite number");
    v.push_back(x);
    start = end + 1;
  }
  if (v.size() != inputs * outputs) {
    throw ConfigError("gain", "plant needs " + std::to_string(inputs) + "x" + std::to_string(outputs) + " = " +
                                  std::to_string(inputs * outputs) + " entries, got " + std::to_string(v.size()));
  }
  return GainMatrix::from_flat(inputs, outputs, v);
}

void analyze(const RunConfig& cfg, const GainMatrix& K, std::ostream& out) {
  out << "K = " << gain_text(K) << '\n';
  std::vector<std::size_t> unstable;
  for (std::size_t i = 0; i < cfg.plant.vertices.size(); ++i) {
    const ClosedLoopVertex cl = close_loop(cfg.plant.vertices[i], cfg.plant.C, K);
    const double abscissa = spectral_abscissa(cl.Acl);
    out << "vertex " << i + 1 << ": ";
    if (!is_stable(cl.Acl)) {
      unstable.push_back(i + 1);
      out << fmt::format("unstable, spectral abscissa {}\n", abscissa);
      continue;
    }
    out << fmt::format("stable, spectral abscissa {}", abscissa);
    if (cl.D2cl.is_zero()) {
      out << fmt::format(", H2^2 = {}", h2_norm_squared(cl));
    } else {
      out << ", H2^2 undefined (D21 != 0)";
    }
    out << fmt::format(", Hinf = {}\n", hinf_norm(cl));
  }
  if (!unstable.empty()) out << fmt::format("closed loop unstable at vertex {}\n", fmt::join(unstable, ", "));

  const FitnessResult f = fitness(K, cfg.plant, cfg.lmi);
  if (f.feasible()) {
    out << fmt::format("LMI delta = {}\n", f.value);
  } else {
    out << fmt::format("LMI infeasible ({}): {}\n", to_string(f.status), f.diagnostic);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust static output feedback synthesis by PSO-DE search over LMI fitness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> out_dir;
  CLI::App* syn = app.add_subcommand("synthesize", "search for a gain minimizing the guaranteed H2 cost");
  syn->add_option("--config", config_path, "JSON run configuration")->required();
  syn->add_option("--seed", seed, "base seed (overrides evolve.seed)");
  syn->add_option("--reps", reps, "number of independent runs (overrides repetitions)")->check(CLI::PositiveNumber);
  syn->add_option("--out", out_dir, "output directory (overrides output.directory)");

  std::string gain_arg;
  CLI::App* ana = app.add_subcommand("analyze", "report stability, norms and LMI cost at a given gain");
  ana->add_option("--config", config_path, "JSON run configuration")->required();
  ana->add_option("--gain", gain_arg, "row-major gain entries, comma separated")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  configure_logging(err);

  try {
    RunConfig cfg = load_config(config_path);
    if (syn->parsed()) {
      if (seed) cfg.evolve.seed = *seed;
      if (reps) cfg.repetitions = *reps;
      if (out_dir) cfg.output.directory = *out_dir;
      const SynthesisSummary summary = synthesize(cfg);
      write_outputs(summary, cfg.output);
      out << "best K = " << gain_text(summary.best().result.best) << '\n';
      out << fmt::format("best delta = {}\n", summary.best().result.best_fitness);
      out << fmt::format("seed = {}, runs = {}, outputs in {}\n", summary.best().seed, summary.runs.size(),
                         cfg.output.directory);
    } else {
      const PlantDims d = cfg.plant.dims();
      analyze(cfg, parse_gain(gain_arg, d.m, d.p), out);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InitializationError& e) {
    err << "startup failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace sofsyn
