#pragma once

// Run configuration: a single JSON document with "system", "task" and
// "output" sections. Complex numbers are [re, im] pairs; residues are
// row-major lists of complex entries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isolab/cli/json_out.hpp"
#include "isolab/errors.hpp"
#include "isolab/system.hpp"

namespace isolab::cli {

struct TaskSpec {
  double tol = 1e-10;
  std::optional<Complex> base_point;
  std::vector<std::vector<Complex>> path;  // pole-vector waypoints
  int samples_per_segment = 8;
  std::size_t index = 0;                   // moving pole for grid tracks
  Complex step{1e-3, 0.0};
  std::size_t steps = 1000;
  double ceiling = 1e8;
  std::optional<Complex> z;                // evaluation point for the tau oracle
  std::optional<Complex> target;           // suspected pole location for probes
  double approach_end = 1e-6;
  std::string control;                     // "constant_u" negative control for pvi
  std::optional<int> manufactured_order;   // synthetic probe data
  Complex manufactured_center{0.5, 0.25};
};

struct RunConfig {
  Json raw;  // echo of the parsed document
  std::optional<FuchsianSystem> system;
  std::optional<ThetaData> theta;
  TaskSpec task;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

namespace detail {

[[noreturn]] inline void bad(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

inline Complex parse_complex(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    bad(where + ": expected [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Complex> parse_complex_list(const Json& j, const std::string& where) {
  if (!j.is_array()) bad(where + ": expected a list");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_complex(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline double positive(const Json& j, const std::string& where) {
  if (!j.is_number() || !(j.get<double>() > 0.0)) bad(where + ": expected a positive number");
  return j.get<double>();
}

inline Normalization parse_normalization(const Json& j) {
  const auto s = j.get<std::string>();
  if (s == "SUM_ZERO") return Normalization::SumZero;
  if (s == "DIAGONAL_K") return Normalization::DiagonalK;
  bad("system.normalization: expected SUM_ZERO or DIAGONAL_K");
}

inline FuchsianSystem parse_system(const Json& j) {
  if (!j.is_object()) bad("system: expected an object");
  if (!j.contains("poles") || !j.contains("residues")) bad("system: poles and residues are required");
  FuchsianSystem sys;
  sys.poles = parse_complex_list(j["poles"], "system.poles");
  const auto& res = j["residues"];
  if (!res.is_array()) bad("system.residues: expected a list");
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto entries = parse_complex_list(res[i], "system.residues[" + std::to_string(i) + "]");
    int p = 0;
    while (p * p < static_cast<int>(entries.size())) ++p;
    if (p * p != static_cast<int>(entries.size()) || p < 1 || p > CMatrix::kMaxDim) {
      bad("system.residues[" + std::to_string(i) + "]: expected p*p entries, p <= 4");
    }
    sys.residues.push_back(CMatrix::from_row_major(p, entries));
  }
  sys.normalization = j.contains("normalization") ? parse_normalization(j["normalization"]) : Normalization::SumZero;
  if (j.contains("theta")) sys.infinity_exponent = parse_complex(j["theta"], "system.theta");
  return sys;
}

inline ThetaData parse_theta(const Json& j, std::size_t n) {
  ThetaData t;
  if (!j.contains("m") || !j.contains("rho")) bad("system.theta_data: m and rho are required");
  t.m = j["m"].get<std::vector<int>>();
  t.rho = parse_complex_list(j["rho"], "system.theta_data.rho");
  t.m_inf = j.value("m_inf", 0);
  if (j.contains("rho_inf")) t.rho_inf = parse_complex(j["rho_inf"], "system.theta_data.rho_inf");
  if (t.m.size() != n || t.rho.size() != n) bad("system.theta_data: one (m, rho) per pole expected");
  for (int m : t.m)
    if (m < 0) bad("system.theta_data.m: entries must be non-negative");
  return t;
}

inline TaskSpec parse_task(const Json& j) {
  TaskSpec t;
  if (j.is_null()) return t;
  if (!j.is_object()) bad("task: expected an object");
  if (j.contains("tol")) t.tol = positive(j["tol"], "task.tol");
  if (j.contains("base_point")) t.base_point = parse_complex(j["base_point"], "task.base_point");
  if (j.contains("path")) {
    for (std::size_t k = 0; k < j["path"].size(); ++k)
      t.path.push_back(parse_complex_list(j["path"][k], "task.path[" + std::to_string(k) + "]"));
  }
  if (j.contains("samples_per_segment")) {
    t.samples_per_segment = j["samples_per_segment"].get<int>();
    if (t.samples_per_segment < 1) bad("task.samples_per_segment: must be positive");
  }
  if (j.contains("index")) t.index = j["index"].get<std::size_t>();
  if (j.contains("step")) {
    t.step = parse_complex(j["step"], "task.step");
    if (std::abs(t.step) == 0.0) bad("task.step: grid step must be non-zero");
  }
  if (j.contains("steps")) {
    t.steps = j["steps"].get<std::size_t>();
    if (t.steps < 4) bad("task.steps: at least 4 grid steps required");
  }
  if (j.contains("ceiling")) t.ceiling = positive(j["ceiling"], "task.ceiling");
  if (j.contains("z")) t.z = parse_complex(j["z"], "task.z");
  if (j.contains("target")) t.target = parse_complex(j["target"], "task.target");
  if (j.contains("approach_end")) t.approach_end = positive(j["approach_end"], "task.approach_end");
  if (j.contains("control")) t.control = j["control"].get<std::string>();
  if (j.contains("manufactured")) {
    const auto& m = j["manufactured"];
    t.manufactured_order = m.value("order", 1);
    if (m.contains("center")) t.manufactured_center = parse_complex(m["center"], "task.manufactured.center");
  }
  return t;
}

}  // namespace detail

inline RunConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "configuration must be a JSON object");
  RunConfig cfg;
  cfg.raw = doc;
  try {
    if (doc.contains("system")) {
      cfg.system = detail::parse_system(doc["system"]);
      cfg.system->validate();
      if (doc["system"].contains("theta_data")) {
        cfg.theta = detail::parse_theta(doc["system"]["theta_data"], cfg.system->size());
        if (cfg.system->dim() == 2 && !cfg.theta->matches(*cfg.system)) {
          detail::bad("system.theta_data: exponents do not match the residue eigenvalues");
        }
      }
    }
    cfg.task = detail::parse_task(doc.contains("task") ? doc["task"] : Json());
    if (doc.contains("output")) {
      const auto& o = doc["output"];
      if (o.contains("seed")) cfg.seed = o["seed"].get<std::uint64_t>();
      if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace isolab::cli
