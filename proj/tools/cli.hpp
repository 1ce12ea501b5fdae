#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace hysctl::cli {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;     // "play", "relay", "bank" or "experiment"
  std::string experiment;  // resolved id when command == "experiment"
  nlohmann::json params = nlohmann::json::object();  // explicitly given numeric parameters
  std::string input;                                 // polyline JSON for play / relay / bank
  std::string out;
  std::string manifest;
};

/// Flags override values from --config. Throws UsageError (or
/// UnknownExperiment) on bad input. Returns false when only help was printed.
bool parse_config(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out);

/// Runs the configured command and writes artifacts. Returns the exit status.
int dispatch(const RunConfig& cfg, std::ostream& out);

/// parse_config + dispatch with exit codes 0 (pass), 1 (failure), 2 (usage).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hysctl::cli
