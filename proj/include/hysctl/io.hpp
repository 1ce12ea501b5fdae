#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hysctl/constructions.hpp"
#include "hysctl/dynamics.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/signals.hpp"

namespace hysctl {

using nlohmann::json;

/// {"grid": [...], "values": [...]}
json to_json(const StepSignal& s);
StepSignal step_from_json(const json& j);

/// {"knots": [[t, v], ...]}
json to_json(const PolylineSignal& p);
PolylineSignal polyline_from_json(const json& j);

json to_json(const PlayState& s);
json to_json(const RelayState& r);
json to_json(const RelayBank& b);

/// {"phases": [{"duration": .., "label": .., "controls": [stepsignal, ...]}, ...]}
json to_json(const ControlSchedule& s);
ControlSchedule schedule_from_json(const json& j);

/// Shortest round-trip decimal form ("%.17g").
std::string format_number(double v);

void write_polyline_csv(std::ostream& os, const PolylineSignal& p, const std::string& value_name = "v");
void write_step_csv(std::ostream& os, const StepSignal& s, const std::string& value_name = "v");

/// Header t, z_1..z_n, h_1..h_p, string (relay outputs joined by ';').
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Header t, relay_index, new_output.
void write_switch_events_csv(std::ostream& os, const std::vector<SwitchEvent>& events);
/// Header t, operator_id, relay, old, new.
void write_events_csv(std::ostream& os, const std::vector<TrajectoryEvent>& events);

void write_table_csv(std::ostream& os, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace hysctl
