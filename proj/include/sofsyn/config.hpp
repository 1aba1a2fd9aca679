#pragma once

// JSON run configuration: plant, LMI spec, search settings, outputs.
//
// Matrices are nested row arrays, or {"zeros": [rows, cols]} for an all-zero
// block (the only way to write a matrix with no rows or columns). Every
// evolve field is optional and defaults to EvolveConfig{}.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sofsyn/evolve.hpp"
#include "sofsyn/lmi.hpp"
#include "sofsyn/plant.hpp"

namespace sofsyn {

struct OutputConfig {
  std::string directory = "out";
  std::string trace_prefix = "trace";  // one <prefix>_seed<N>.csv per run
  std::string summary = "summary.json";

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  std::vector<std::string> notes;  // free text carried through round trips
  PolytopicPlant plant;
  LmiSpec lmi;
  EvolveConfig evolve;
  OutputConfig output;
  std::size_t repetitions = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Malformed JSON, a missing or mistyped field, or a value out of range.
// field() is a dotted path such as "plant.vertices[1].A" ("" for syntax
// errors, whose message carries line and column).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Parses and validates (plant, LMI spec, evolve settings against the gain
// dimension). Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

nlohmann::ordered_json matrix_to_json(const Matrix& m);

}  // namespace sofsyn
