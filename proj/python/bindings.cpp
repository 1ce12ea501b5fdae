#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>
#include <vector>

#include "hysctl/constructions.hpp"
#include "hysctl/error.hpp"
#include "hysctl/experiments.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/io.hpp"
#include "hysctl/signals.hpp"
#include "hysctl/version.hpp"

namespace py = pybind11;
using namespace hysctl;

namespace {

using Knots = std::vector<std::pair<double, double>>;

PolylineSignal to_polyline(const Knots& kn) {
  std::vector<Knot> k;
  k.reserve(kn.size());
  for (const auto& [t, v] : kn) k.push_back({t, v});
  return PolylineSignal(std::move(k));
}

Knots from_polyline(const PolylineSignal& p) {
  Knots out;
  for (const auto& k : p.knots()) out.emplace_back(k.t, k.v);
  return out;
}

// Step signals travel as (breakpoints, values).
StepSignal to_step(const std::vector<double>& times, const std::vector<double>& values) {
  return StepSignal(TimeGrid(times), values);
}

py::dict bank_result(const BankResponse& r) {
  py::list events;
  for (const auto& e : r.events) events.append(py::make_tuple(e.time, e.index, e.new_out));
  py::dict d;
  const auto pts = r.output.grid().points();
  d["times"] = std::vector<double>(pts.begin(), pts.end());
  const auto vals = r.output.values();
  d["values"] = std::vector<double>(vals.begin(), vals.end());
  d["events"] = events;
  d["final_outputs"] = r.final_state.outputs();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Play operators, relay banks and control constructions";
  m.attr("__version__") = kVersion;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<UnknownExperiment>(m, "UnknownExperiment", PyExc_KeyError);

  m.def("play_update", [](double rho, double w, double u) { return play_update(PlayState{rho, w}, u).w; },
        py::arg("rho"), py::arg("w"), py::arg("u"));
  m.def(
      "play_apply", [](const Knots& u, double w0, double rho) { return from_polyline(play_apply(to_polyline(u), w0, rho)); },
      py::arg("knots"), py::arg("w0"), py::arg("rho"));
  m.def(
      "truncated_play_apply",
      [](const Knots& u, double w0) { return from_polyline(truncated_play_apply(to_polyline(u), w0)); },
      py::arg("knots"), py::arg("w0"));
  m.def(
      "bank_apply",
      [](const Knots& u, std::size_t k, int out0) {
        return bank_result(bank_apply(RelayBank::uniform(k, out0), to_polyline(u)));
      },
      py::arg("knots"), py::arg("k"), py::arg("out0") = -1);

  m.def(
      "build_uk",
      [](const std::vector<double>& times, const std::vector<double>& values, double w0, int k) {
        return from_polyline(build_uk(to_step(times, values), w0, k));
      },
      py::arg("times"), py::arg("values"), py::arg("w0"), py::arg("k"));
  m.def(
      "build_vk",
      [](const std::vector<double>& times, const std::vector<double>& values, double w0, double rho, int k) {
        return from_polyline(build_vk(to_step(times, values), w0, rho, k));
      },
      py::arg("times"), py::arg("values"), py::arg("w0"), py::arg("rho"), py::arg("k"));
  m.def(
      "build_vj", [](const Knots& x, double rho, int j) { return from_polyline(build_vj(to_polyline(x), rho, j)); },
      py::arg("knots"), py::arg("rho"), py::arg("j"));
  m.def(
      "sup_distance", [](const Knots& a, const Knots& b) { return sup_distance(to_polyline(a), to_polyline(b)); },
      py::arg("a"), py::arg("b"));

  m.def("experiment_ids", &experiment_ids);
  m.def(
      "default_params", [](const std::string& id) { return default_params(id).dump(); }, py::arg("id"));
  // Overrides and the report cross the boundary as JSON text.
  m.def(
      "run_experiment",
      [](const std::string& id, const std::string& overrides) {
        const auto r = run_experiment(id, nlohmann::json::parse(overrides));
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        nlohmann::json j{{"experiment", r.id},         {"params", r.params}, {"tolerances", r.tolerances},
                         {"columns", r.columns},       {"rows", r.rows},     {"checks", checks},
                         {"extra", r.extra},           {"verdict", r.verdict() ? "pass" : "fail"}};
        return j.dump();
      },
      py::arg("id"), py::arg("overrides") = "{}");
}
