#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isolab/cli/json_out.hpp"

namespace isolab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Status { Pass, Fail, Inconclusive };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Inconclusive: return "INCONCLUSIVE";
  }
  return "FAIL";
}

struct Check {
  std::string name;
  std::string invariant;  // which property the residual measures
  double measured = 0.0;
  Json tolerance;         // bound, or [lo, hi] for range checks
  Status status = Status::Fail;
  std::string note;

  static Check upper(std::string name, std::string invariant, double measured, double bound) {
    Check c{std::move(name), std::move(invariant), measured, bound, Status::Fail, {}};
    c.status = (measured <= bound) ? Status::Pass : Status::Fail;
    return c;
  }
  static Check lower(std::string name, std::string invariant, double measured, double bound) {
    Check c{std::move(name), std::move(invariant), measured, Json::object({{"min", bound}}), Status::Fail, {}};
    c.status = (measured >= bound) ? Status::Pass : Status::Fail;
    return c;
  }
  static Check range(std::string name, std::string invariant, double measured, double lo, double hi) {
    Check c{std::move(name), std::move(invariant), measured, Json::array({lo, hi}), Status::Fail, {}};
    c.status = (measured >= lo && measured <= hi) ? Status::Pass : Status::Fail;
    return c;
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["invariant"] = invariant;
    j["measured"] = measured;
    j["tolerance"] = tolerance;
    j["status"] = status_name(status);
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  Json config;
  Json results = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::string error;  // error code name when the run aborted

  void add(Check c) { checks.push_back(std::move(c)); }

  bool failed() const {
    for (const auto& c : checks)
      if (c.status == Status::Fail) return true;
    return false;
  }

  Status overall() const {
    bool inconclusive = false;
    for (const auto& c : checks) {
      if (c.status == Status::Fail) return Status::Fail;
      inconclusive = inconclusive || c.status == Status::Inconclusive;
    }
    return inconclusive ? Status::Inconclusive : Status::Pass;
  }

  Json to_json() const {
    Json j;
    j["tool"] = "isolab";
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["results"] = results;
    Json cs = Json::array();
    for (const auto& c : checks) cs.push_back(c.to_json());
    j["checks"] = cs;
    j["artifacts"] = artifacts;
    if (!error.empty()) j["error"] = error;
    j["status"] = error.empty() ? status_name(overall()) : "ABORTED";
    return j;
  }
};

}  // namespace isolab::cli
