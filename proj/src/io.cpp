#include "hysctl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "hysctl/error.hpp"

namespace hysctl {

json to_json(const StepSignal& s) {
  const auto g = s.grid().points();
  const auto v = s.values();
  return {{"grid", std::vector<double>(g.begin(), g.end())}, {"values", std::vector<double>(v.begin(), v.end())}};
}

StepSignal step_from_json(const json& j) {
  try {
    return StepSignal(TimeGrid(j.at("grid").get<std::vector<double>>()), j.at("values").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed step signal: ") + e.what());
  }
}

json to_json(const PolylineSignal& p) {
  json knots = json::array();
  for (const auto& k : p.knots()) knots.push_back({k.t, k.v});
  return {{"knots", knots}};
}

PolylineSignal polyline_from_json(const json& j) {
  try {
    std::vector<Knot> knots;
    for (const auto& k : j.at("knots")) {
      if (!k.is_array() || k.size() != 2) throw DomainError("polyline knots must be [t, v] pairs");
      knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    return PolylineSignal(std::move(knots));
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed polyline: ") + e.what());
  }
}

json to_json(const PlayState& s) { return {{"rho", s.rho}, {"w", s.w}}; }

json to_json(const RelayState& r) { return {{"lo", r.lo}, {"hi", r.hi}, {"out", r.out}}; }

json to_json(const RelayBank& b) {
  json relays = json::array();
  for (const auto& r : b.relays()) relays.push_back(to_json(r));
  return {{"k", b.size()}, {"relays", relays}, {"output", b.output()}};
}

json to_json(const ControlSchedule& s) {
  json phases = json::array();
  for (const auto& p : s.phases()) {
    json controls = json::array();
    for (const auto& c : p.controls) controls.push_back(to_json(c));
    phases.push_back({{"duration", p.duration}, {"label", p.label}, {"controls", controls}});
  }
  return {{"phases", phases}};
}

ControlSchedule schedule_from_json(const json& j) {
  try {
    const auto& phases = j.at("phases");
    if (phases.empty()) throw DomainError("schedule has no phases");
    ControlSchedule s(phases.front().at("controls").size());
    for (const auto& p : phases) {
      Phase phase{p.at("duration").get<double>(), p.value("label", std::string{}), {}};
      for (const auto& c : p.at("controls")) phase.controls.push_back(step_from_json(c));
      s.append(std::move(phase));
    }
    return s;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed schedule: ") + e.what());
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_polyline_csv(std::ostream& os, const PolylineSignal& p, const std::string& value_name) {
  os << "t," << value_name << '\n';
  for (const auto& k : p.knots()) os << format_number(k.t) << ',' << format_number(k.v) << '\n';
}

void write_step_csv(std::ostream& os, const StepSignal& s, const std::string& value_name) {
  os << "t_start,t_end," << value_name << '\n';
  const auto g = s.grid().points();
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    os << format_number(g[i]) << ',' << format_number(g[i + 1]) << ',' << format_number(s.values()[i]) << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) throw DomainError("empty trajectory");
  const auto n = traj.states.front().size();
  const std::size_t h = traj.hysteresis.empty() ? 0 : traj.hysteresis.front().size();
  os << 't';
  for (Eigen::Index i = 0; i < n; ++i) os << ",z_" << i + 1;
  for (std::size_t i = 0; i < h; ++i) os << ",h_" << i + 1;
  if (!traj.strings.empty()) os << ",string";
  os << '\n';
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_number(traj.times[s]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(traj.states[s][i]);
    for (std::size_t i = 0; i < h; ++i) os << ',' << format_number(traj.hysteresis[s][i]);
    if (!traj.strings.empty()) {
      os << ',';
      for (std::size_t i = 0; i < traj.strings[s].size(); ++i) os << (i ? ";" : "") << traj.strings[s][i];
    }
    os << '\n';
  }
}

void write_switch_events_csv(std::ostream& os, const std::vector<SwitchEvent>& events) {
  os << "t,relay_index,new_output\n";
  for (const auto& e : events) os << format_number(e.time) << ',' << e.index << ',' << e.new_out << '\n';
}

void write_events_csv(std::ostream& os, const std::vector<TrajectoryEvent>& events) {
  os << "t,operator_id,relay,old,new\n";
  for (const auto& e : events)
    os << format_number(e.time) << ',' << e.operator_id << ',' << e.relay << ',' << e.old_out << ',' << e.new_out
       << '\n';
}

void write_table_csv(std::ostream& os, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
    os << '\n';
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace hysctl
