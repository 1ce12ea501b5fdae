#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "hysctl/error.hpp"
#include "hysctl/experiments.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/io.hpp"
#include "hysctl/version.hpp"

namespace hysctl::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kFileKeys{"experiment", "k",     "j", "rho", "eta",   "step", "seed", "cases",
                                      "w0",         "A",     "B", "input", "out", "manifest"};
const std::map<std::string, std::string> kAliases{{"thm2", "thm2_convergence"}};

struct Flags {
  std::string config;
  std::string input;
  std::string out;
  std::string manifest;
  std::string id;
  std::vector<int> k;
  std::vector<int> j;
  double rho = 0.0;
  double eta = 0.0;
  double step = 0.0;
  double w0 = 0.0;
  std::uint64_t seed = 0;
  int cases = 0;
  std::vector<double> A;
  std::vector<double> B;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON file with any of the keys below; flags win");
  app->add_option("--k", f.k, "sharpness / relay-count sweep, comma separated")->delimiter(',');
  app->add_option("--j", f.j, "density sweep, comma separated")->delimiter(',');
  app->add_option("--rho", f.rho, "play half-width (> 0)");
  app->add_option("--eta", f.eta, "relay threshold (> 0)");
  app->add_option("--step", f.step, "integration step (> 0)");
  app->add_option("--seed", f.seed, "seed for randomized cases");
  app->add_option("--cases", f.cases, "number of randomized cases");
  app->add_option("--w0", f.w0, "initial operator output");
  app->add_option("--A", f.A, "start point, comma separated")->delimiter(',');
  app->add_option("--B", f.B, "target point, comma separated")->delimiter(',');
  app->add_option("--input", f.input, "polyline JSON {\"knots\": [[t, v], ...]}");
  app->add_option("--out", f.out, "CSV output path");
  app->add_option("--manifest", f.manifest, "JSON manifest path");
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw UsageError(std::string("cannot read ") + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed ") + what + " '" + path + "': " + e.what());
  }
}

void validate(const json& params) {
  for (const char* key : {"rho", "eta", "step"}) {
    if (!params.contains(key)) continue;
    if (!params[key].is_number() || !(params[key].get<double>() > 0.0))
      throw UsageError(std::string("--") + key + " must be a positive number");
  }
  for (const char* key : {"k", "j"}) {
    if (!params.contains(key)) continue;
    if (!params[key].is_array() || params[key].empty()) throw UsageError(std::string("--") + key + " needs a list");
    for (const auto& v : params[key])
      if (!v.is_number_integer() || v.get<long long>() < 1)
        throw UsageError(std::string("--") + key + " entries must be positive integers");
  }
  if (params.contains("cases") && (!params["cases"].is_number_integer() || params["cases"].get<long long>() < 0))
    throw UsageError("--cases must be a nonnegative integer");
  if (params.contains("seed") && !params["seed"].is_number_unsigned()) throw UsageError("--seed must be nonnegative");
  if (params.contains("w0") && !params["w0"].is_number()) throw UsageError("--w0 must be a number");
  for (const char* key : {"A", "B"})
    if (params.contains(key) && !params[key].is_array()) throw UsageError(std::string("--") + key + " needs a list");
}

std::string resolve_id(const std::string& id) {
  const auto alias = kAliases.find(id);
  const std::string full = alias == kAliases.end() ? id : alias->second;
  default_params(full);  // throws UnknownExperiment
  return full;
}

json header(const RunConfig& cfg) {
  return {{"tool", "hysim"}, {"version", kVersion}, {"command", cfg.command}};
}

// Switch logs go next to --out as <stem>.events.csv.
std::string events_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".events.csv");
  return p.string();
}

void emit(const RunConfig& cfg, const std::string& csv, const json& manifest, const std::string& events_csv = {}) {
  if (!cfg.out.empty()) write_file_atomic(cfg.out, csv);
  if (!cfg.out.empty() && !events_csv.empty()) write_file_atomic(events_path(cfg.out), events_csv);
  if (!cfg.manifest.empty()) write_file_atomic(cfg.manifest, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- commands

int run_play(const RunConfig& cfg, std::ostream& out) {
  const PolylineSignal in = polyline_from_json(read_json_file(cfg.input, "input"));
  const double rho = cfg.params.value("rho", 0.2);
  const double w0 = cfg.params.value("w0", in.front());
  const PolylineSignal w = play_apply(in, w0, rho);

  std::ostringstream csv;
  csv << "t,u,w\n";
  for (const auto& kn : w.knots()) csv << format_number(kn.t) << ',' << format_number(in(kn.t)) << ','
                                       << format_number(kn.v) << '\n';
  json m = header(cfg);
  m["params"] = {{"rho", rho}, {"w0", w0}};
  m["input"] = cfg.input;
  m["output"] = to_json(w);
  emit(cfg, csv.str(), m);
  out << "play: " << w.size() << " output knots, final output " << format_number(w.back()) << '\n';
  return 0;
}

int run_relay(const RunConfig& cfg, std::ostream& out) {
  const PolylineSignal in = polyline_from_json(read_json_file(cfg.input, "input"));
  const double eta = cfg.params.value("eta", 0.3);
  const double z0 = in.front();
  const double w0 = cfg.params.value("w0", z0 > eta ? 1.0 : -1.0);
  if (w0 != 1.0 && w0 != -1.0) throw UsageError("--w0 must be +1 or -1 for a relay");

  RelayState state{-eta, eta, static_cast<int>(w0)};
  if (!relay_consistent(state, z0)) throw DomainError("relay output " + format_number(w0) + " is inconsistent with input " + format_number(z0));
  std::vector<double> pts{0.0};
  std::vector<double> vals{w0};
  json events = json::array();
  std::vector<SwitchEvent> log;
  const auto kn = in.knots();
  const double tol = kKnotTolerance * std::max(1.0, in.horizon());
  for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
    const auto step = relay_advance(state, kn[i].v, kn[i + 1].v, kn[i].t, kn[i + 1].t);
    state = step.state;
    if (!step.event) continue;
    events.push_back({{"t", step.event->time}, {"old", step.event->old_out}, {"new", step.event->new_out}});
    log.push_back(*step.event);
    if (step.event->time <= pts.back() + tol) {
      vals.back() = state.out;
    } else if (step.event->time < in.horizon() - tol) {
      pts.push_back(step.event->time);
      vals.push_back(state.out);
    }
  }
  pts.push_back(in.horizon());
  const StepSignal w(TimeGrid(std::move(pts)), std::move(vals));

  std::ostringstream csv;
  write_step_csv(csv, w, "w");
  json m = header(cfg);
  m["params"] = {{"eta", eta}, {"w0", w0}};
  m["input"] = cfg.input;
  m["events"] = events;
  m["final_output"] = state.out;
  std::ostringstream ev;
  write_switch_events_csv(ev, log);
  emit(cfg, csv.str(), m, ev.str());
  out << "relay: " << events.size() << " switch events, final output " << state.out << '\n';
  return 0;
}

int run_bank(const RunConfig& cfg, std::ostream& out) {
  const PolylineSignal in = polyline_from_json(read_json_file(cfg.input, "input"));
  std::size_t k = 4;
  if (cfg.params.contains("k")) {
    if (cfg.params["k"].size() != 1) throw UsageError("bank takes a single --k");
    k = cfg.params["k"][0].get<std::size_t>();
  }
  const double w0 = cfg.params.value("w0", -1.0);
  const double on = (w0 + 1.0) * static_cast<double>(k) / 2.0;
  if (!(on >= 0.0 && on <= static_cast<double>(k)) || std::abs(on - std::round(on)) > 1e-9)
    throw UsageError("--w0 must be a staircase level (2c - k) / k of the bank");
  const RelayBank bank = RelayBank::staircase(k, static_cast<std::size_t>(std::round(on)));
  const BankResponse resp = bank_apply(bank, in);

  std::ostringstream csv;
  write_step_csv(csv, resp.output, "w");
  json m = header(cfg);
  m["params"] = {{"k", k}, {"w0", w0}};
  m["input"] = cfg.input;
  json events = json::array();
  for (const auto& e : resp.events)
    events.push_back({{"t", e.time}, {"relay", e.index}, {"old", e.old_out}, {"new", e.new_out}});
  m["events"] = events;
  m["final_state"] = to_json(resp.final_state);
  std::ostringstream ev;
  write_switch_events_csv(ev, resp.events);
  emit(cfg, csv.str(), m, ev.str());
  out << "bank: " << resp.events.size() << " relay switches, final output " << format_number(resp.final_state.output())
      << '\n';
  return 0;
}

int run_experiment_command(const RunConfig& cfg, std::ostream& out) {
  const ExperimentReport r = run_experiment(cfg.experiment, cfg.params);
  std::ostringstream csv;
  write_table_csv(csv, r.columns, r.rows);

  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  json m = header(cfg);
  m["experiment"] = r.id;
  m["params"] = r.params;
  m["tolerances"] = r.tolerances;
  m["columns"] = r.columns;
  m["rows"] = r.rows;
  m["checks"] = checks;
  m["extra"] = r.extra;
  m["verdict"] = r.verdict() ? "pass" : "fail";
  emit(cfg, csv.str(), m);

  out << "experiment " << r.id << '\n' << csv.str();
  for (const auto& c : r.checks)
    out << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
  out << "verdict: " << (r.verdict() ? "pass" : "fail") << "  runtime: " << r.runtime << " s\n";
  return r.verdict() ? 0 : 1;
}

}  // namespace

bool parse_config(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out) {
  CLI::App app{"Hysteresis control toolkit: play, relays, relay banks and reproducible experiments", "hysim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  Flags f;
  add_common(&app, f);

  std::vector<CLI::App*> subs;
  subs.push_back(app.add_subcommand("play", "apply the play operator to --input"));
  subs.push_back(app.add_subcommand("relay", "apply a delayed relay with thresholds (-eta, eta) to --input"));
  subs.push_back(app.add_subcommand("bank", "apply a bank of k relays to --input"));
  CLI::App* sim = app.add_subcommand("sim", "run an experiment by id (alias: thm2)");
  sim->add_option("id", f.id, "experiment id");
  subs.push_back(sim);
  for (const auto& id : experiment_ids()) subs.push_back(app.add_subcommand(id, "run experiment " + id));
  for (auto* s : subs) add_common(s, f);

  std::ostringstream footer;
  footer << "\nExperiment defaults:\n";
  for (const auto& id : experiment_ids()) footer << "  " << id << " " << default_params(id).dump() << '\n';
  footer << "Operator defaults: play rho=0.2 w0=input(0); relay eta=0.3; bank k=4 w0=-1\n"
         << "Exit status: 0 pass, 1 failed verdict or domain error, 2 usage error.";
  app.footer(footer.str());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return false;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return false;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return false;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* used = &app;
  for (auto* s : subs)
    if (s->parsed()) used = s;

  // Config file first, then flags on top.
  json params = json::object();
  std::string file_experiment;
  if (!f.config.empty()) {
    const json file = read_json_file(f.config, "config");
    if (!file.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (!kFileKeys.count(key)) throw UsageError("unknown config key '" + key + "'");
      if (key == "experiment") {
        file_experiment = value.get<std::string>();
      } else if (key == "input") {
        cfg.input = value.get<std::string>();
      } else if (key == "out") {
        cfg.out = value.get<std::string>();
      } else if (key == "manifest") {
        cfg.manifest = value.get<std::string>();
      } else {
        params[key] = value;
      }
    }
  }
  auto given = [&](const char* name) { return used->count(name) > 0 || app.count(name) > 0; };
  if (given("--k")) params["k"] = f.k;
  if (given("--j")) params["j"] = f.j;
  if (given("--rho")) params["rho"] = f.rho;
  if (given("--eta")) params["eta"] = f.eta;
  if (given("--step")) params["step"] = f.step;
  if (given("--seed")) params["seed"] = f.seed;
  if (given("--cases")) params["cases"] = f.cases;
  if (given("--w0")) params["w0"] = f.w0;
  if (given("--A")) params["A"] = f.A;
  if (given("--B")) params["B"] = f.B;
  if (given("--input")) cfg.input = f.input;
  if (given("--out")) cfg.out = f.out;
  if (given("--manifest")) cfg.manifest = f.manifest;
  validate(params);

  const std::string name = used == &app ? std::string{} : used->get_name();
  if (name == "play" || name == "relay" || name == "bank") {
    static const std::map<std::string, std::set<std::string>> allowed{
        {"play", {"rho", "w0"}}, {"relay", {"eta", "w0"}}, {"bank", {"k", "w0"}}};
    for (const auto& [key, value] : params.items())
      if (!allowed.at(name).count(key)) throw UsageError(name + " does not take '" + key + "'");
    if (cfg.input.empty()) throw UsageError(name + " needs --input");
    cfg.command = name;
  } else {
    std::string id = name == "sim" ? f.id : name;
    if (id.empty()) id = file_experiment;
    if (id.empty()) throw UsageError("no command or experiment given (see --help)");
    cfg.command = "experiment";
    cfg.experiment = resolve_id(id);
    const json defaults = default_params(cfg.experiment);
    for (const auto& [key, value] : params.items())
      if (!defaults.contains(key)) throw UsageError("experiment " + cfg.experiment + " does not take '" + key + "'");
  }
  cfg.params = std::move(params);
  return true;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
  if (cfg.command == "play") return run_play(cfg, out);
  if (cfg.command == "relay") return run_relay(cfg, out);
  if (cfg.command == "bank") return run_bank(cfg, out);
  if (cfg.command == "experiment") return run_experiment_command(cfg, out);
  throw UsageError("unknown command '" + cfg.command + "'");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    if (!parse_config(argc, argv, cfg, out)) return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const UnknownExperiment& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    return dispatch(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hysctl::cli
