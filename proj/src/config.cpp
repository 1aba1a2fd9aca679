#include "sofsyn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sofsyn/errors.hpp"

namespace sofsyn {
namespace {

using Json = nlohmann::ordered_json;

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(child(path, key), "unknown field");
}

const Json& require(const Json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(child(path, key), "missing required field");
  return *it;
}

const Json* optional(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::size_t count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

Matrix matrix(const Json& j, const std::string& path) {
  if (j.is_object()) {
    reject_unknown(j, path, {"zeros"});
    const Json& shape = require(j, path, "zeros");
    if (!shape.is_array() || shape.size() != 2) throw ConfigError(child(path, "zeros"), "expected [rows, cols]");
    return Matrix(count(shape[0], child(path, "zeros")), count(shape[1], child(path, "zeros")));
  }
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of rows or {\"zeros\": [r, c]}");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty()) throw ConfigError(rp, "expected a nonempty array of numbers");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw ConfigError(rp, "row length differs from the first row");
    for (std::size_t c = 0; c < cols; ++c) data.push_back(number(j[r][c], rp + "[" + std::to_string(c) + "]"));
  }
  return Matrix(rows, cols, std::move(data));
}

PolytopicPlant parse_plant(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"vertices", "C"});
  PolytopicPlant plant;
  const Json& vertices = require(j, path, "vertices");
  if (!vertices.is_array() || vertices.empty()) throw ConfigError(child(path, "vertices"), "expected a nonempty array");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const std::string vp = child(path, "vertices") + "[" + std::to_string(i) + "]";
    const Json& v = vertices[i];
    reject_unknown(v, vp, {"A", "B1", "B2", "C1", "D11", "D12", "C2", "D21", "D22"});
    auto m = [&](const char* key) { return matrix(require(v, vp, key), child(vp, key)); };
    plant.vertices.push_back(
        PlantVertex{m("A"), m("B1"), m("B2"), m("C1"), m("D11"), m("D12"), m("C2"), m("D21"), m("D22")});
  }
  plant.C = matrix(require(j, path, "C"), child(path, "C"));
  return plant;
}

LmiSpec parse_lmi(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"gamma", "delta_cap", "strictness_eps"});
  LmiSpec spec;
  if (const Json* g = optional(j, "gamma")) spec.gamma = number(*g, child(path, "gamma"));
  if (const Json* c = optional(j, "delta_cap")) spec.delta_cap = number(*c, child(path, "delta_cap"));
  if (const Json* e = optional(j, "strictness_eps")) spec.strictness_eps = number(*e, child(path, "strictness_eps"));
  return spec;
}

EvolveConfig parse_evolve(const Json& j, const std::string& path) {
  reject_unknown(j, path,
                 {"chi", "c1", "c2", "F", "CR", "NP", "max_generations", "search_box", "resample_cap", "seed"});
  EvolveConfig cfg;
  auto real = [&](const char* key, double& out) {
    if (const Json* v = optional(j, key)) out = number(*v, child(path, key));
  };
  auto whole = [&](const char* key, std::size_t& out) {
    if (const Json* v = optional(j, key)) out = count(*v, child(path, key));
  };
  real("chi", cfg.chi);
  real("c1", cfg.c1);
  real("c2", cfg.c2);
  real("F", cfg.F);
  real("CR", cfg.CR);
  whole("NP", cfg.NP);
  whole("max_generations", cfg.max_generations);
  whole("resample_cap", cfg.resample_cap);
  if (const Json* s = optional(j, "seed")) {
    if (!s->is_number_unsigned()) throw ConfigError(child(path, "seed"), "expected a nonnegative integer");
    cfg.seed = s->get<std::uint64_t>();
  }
  if (const Json* box = optional(j, "search_box")) {
    const std::string bp = child(path, "search_box");
    if (!box->is_array()) throw ConfigError(bp, "expected an array of [lower, upper] pairs");
    for (std::size_t k = 0; k < box->size(); ++k) {
      const std::string ip = bp + "[" + std::to_string(k) + "]";
      const Json& iv = (*box)[k];
      if (!iv.is_array() || iv.size() != 2) throw ConfigError(ip, "expected [lower, upper]");
      cfg.search_box.push_back(Interval{number(iv[0], ip), number(iv[1], ip)});
    }
  }
  return cfg;
}

OutputConfig parse_output(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"directory", "trace_prefix", "summary"});
  OutputConfig out;
  auto text = [&](const char* key, std::string& target) {
    if (const Json* v = optional(j, key)) {
      if (!v->is_string()) throw ConfigError(child(path, key), "expected a string");
      target = v->get<std::string>();
    }
  };
  text("directory", out.directory);
  text("trace_prefix", out.trace_prefix);
  text("summary", out.summary);
  return out;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  if (m.empty() || m.is_zero()) return Json{{"zeros", {m.rows(), m.cols()}}};
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("JSON syntax error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "top level must be an object");
  reject_unknown(j, "", {"notes", "plant", "lmi", "evolve", "output", "repetitions"});

  RunConfig cfg;
  if (const Json* notes = optional(j, "notes")) {
    if (!notes->is_array()) throw ConfigError("notes", "expected an array of strings");
    for (const auto& n : *notes) {
      if (!n.is_string()) throw ConfigError("notes", "expected an array of strings");
      cfg.notes.push_back(n.get<std::string>());
    }
  }
  cfg.plant = parse_plant(require(j, "", "plant"), "plant");
  if (const Json* lmi = optional(j, "lmi")) cfg.lmi = parse_lmi(*lmi, "lmi");
  if (const Json* ev = optional(j, "evolve")) cfg.evolve = parse_evolve(*ev, "evolve");
  if (const Json* out = optional(j, "output")) cfg.output = parse_output(*out, "output");
  if (const Json* reps = optional(j, "repetitions")) cfg.repetitions = count(*reps, "repetitions");
  if (cfg.repetitions == 0) throw ConfigError("repetitions", "must be at least 1");

  try {
    validate_plant(cfg.plant);
  } catch (const ValidationError& e) {
    throw ConfigError("plant." + e.field(), e.what());
  }
  try {
    validate_lmi_spec(cfg.lmi);
  } catch (const ContractError& e) {
    throw ConfigError("lmi", e.what());
  }
  try {
    const PlantDims d = cfg.plant.dims();
    validate_evolve_config(cfg.evolve, d.m * d.p);
  } catch (const ValidationError& e) {
    throw ConfigError("evolve." + e.field(), e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Json to_json(const RunConfig& cfg) {
  Json j;
  if (!cfg.notes.empty()) j["notes"] = cfg.notes;

  Json vertices = Json::array();
  for (const PlantVertex& v : cfg.plant.vertices) {
    vertices.push_back(Json{{"A", matrix_to_json(v.A)},     {"B1", matrix_to_json(v.B1)},
                            {"B2", matrix_to_json(v.B2)},   {"C1", matrix_to_json(v.C1)},
                            {"D11", matrix_to_json(v.D11)}, {"D12", matrix_to_json(v.D12)},
                            {"C2", matrix_to_json(v.C2)},   {"D21", matrix_to_json(v.D21)},
                            {"D22", matrix_to_json(v.D22)}});
  }
  j["plant"] = Json{{"vertices", std::move(vertices)}, {"C", matrix_to_json(cfg.plant.C)}};

  Json lmi = Json::object();
  if (cfg.lmi.gamma) lmi["gamma"] = *cfg.lmi.gamma;
  if (cfg.lmi.delta_cap) lmi["delta_cap"] = *cfg.lmi.delta_cap;
  lmi["strictness_eps"] = cfg.lmi.strictness_eps;
  j["lmi"] = std::move(lmi);

  const EvolveConfig& e = cfg.evolve;
  Json box = Json::array();
  for (const Interval& iv : e.search_box) box.push_back({iv.lower, iv.upper});
  j["evolve"] = Json{{"chi", e.chi},
                     {"c1", e.c1},
                     {"c2", e.c2},
                     {"F", e.F},
                     {"CR", e.CR},
                     {"NP", e.NP},
                     {"max_generations", e.max_generations},
                     {"search_box", std::move(box)},
                     {"resample_cap", e.resample_cap},
                     {"seed", e.seed}};
  j["output"] = Json{{"directory", cfg.output.directory},
                     {"trace_prefix", cfg.output.trace_prefix},
                     {"summary", cfg.output.summary}};
  j["repetitions"] = cfg.repetitions;
  return j;
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("", "cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace sofsyn
