#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fwtlab/harness/fwt.hpp"

namespace fwt {

/// A canned experiment. `defaults` lists every accepted parameter; `run`
/// receives a fully resolved parameter block.
struct Experiment {
  std::string name;
  std::string description;
  std::string topic;
  nlohmann::json defaults;
  /// Re-checks the module guards without running; throws InvalidInput.
  std::function<void(const nlohmann::json&)> validate;
  std::function<FwtReport(const nlohmann::json&)> run;
};

using Registry = std::vector<Experiment>;

/// The verdict table in display order.
Registry default_registry();

const Experiment* find_experiment(const Registry& reg, const std::string& name);

/// defaults merged with overrides. Unknown keys and type mismatches throw
/// InvalidInput naming the dotted key path; the result is validated.
nlohmann::json resolve_config(const Experiment& e, const nlohmann::json& overrides);

struct RunOutcome {
  FwtReport report;
  double runtime_seconds = 0.0;
};

/// Runs one experiment on a resolved config. Errors become a FAILED_TO_RUN
/// row carrying the message.
RunOutcome run_experiment(const Experiment& e, const nlohmann::json& config);

/// Every experiment at its defaults, in registry order.
std::vector<FwtReport> verdict_table(const Registry& reg);

}  // namespace fwt
