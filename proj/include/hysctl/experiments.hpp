#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace hysctl {

class UnknownExperiment : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string id;
  nlohmann::json params;      // fully resolved inputs
  nlohmann::json tolerances;  // every threshold a check compares against
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Check> checks;
  nlohmann::json extra;  // secondary tables (events, fitted rates)
  double runtime = 0.0;  // seconds; not part of any written artifact

  bool verdict() const;
};

const std::vector<std::string>& experiment_ids();

/// Defaults for `id`. Throws UnknownExperiment.
nlohmann::json default_params(const std::string& id);

/// Defaults overlaid with `overrides`; keys the experiment does not know are rejected.
nlohmann::json resolve_params(const std::string& id, const nlohmann::json& overrides);

ExperimentReport run_experiment(const std::string& id, const nlohmann::json& overrides = nlohmann::json::object());

/// Least-squares slope of log(gap) against log(x).
double convergence_fit(std::span<const double> x, std::span<const double> gap);

}  // namespace hysctl
