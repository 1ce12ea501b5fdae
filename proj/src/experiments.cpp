#include "hysctl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "hysctl/constructions.hpp"
#include "hysctl/dynamics.hpp"
#include "hysctl/error.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/signals.hpp"

namespace hysctl {

namespace {

using json = nlohmann::json;

const std::vector<double> kSampleAlpha{1.0, -1.0, 0.5, 2.0};
const std::vector<double> kThm2Second{2.0, 0.5, -1.0, 1.0};

StepSignal unit_step(const std::vector<double>& values) {
  return StepSignal(TimeGrid::uniform(static_cast<double>(values.size()), values.size()), values);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- parameter access

std::vector<int> int_list(const json& p, const char* key) {
  std::vector<int> out;
  for (const auto& v : p.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() < 1)
      throw DomainError(std::string("'") + key + "' must be a list of positive integers");
    out.push_back(v.get<int>());
  }
  if (out.empty()) throw DomainError(std::string("'") + key + "' must not be empty");
  return out;
}

double positive(const json& p, const char* key) {
  const double v = p.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string("'") + key + "' must be positive");
  return v;
}

int count(const json& p, const char* key) {
  if (!p.at(key).is_number_integer() || p.at(key).get<long long>() < 0)
    throw DomainError(std::string("'") + key + "' must be a nonnegative integer");
  return p.at(key).get<int>();
}

Vec point(const json& p, const char* key, Eigen::Index n) {
  const auto v = p.at(key).get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n) {
    std::ostringstream os;
    os << "'" << key << "' must have " << n << " coordinates";
    throw DomainError(os.str());
  }
  return Eigen::Map<const Vec>(v.data(), n);
}

std::mt19937_64 make_rng(const json& p) { return std::mt19937_64(p.at("seed").get<std::uint64_t>()); }

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

IntegratorOptions options(const json& p) {
  IntegratorOptions o;
  o.step = positive(p, "step");
  return o;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// ---------------------------------------------------------------- fig3_surjectivity

void run_fig3(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const double w0 = p.at("w0").get<double>();
  const auto ks = int_list(p, "k");
  const StepSignal ubar = unit_step(kSampleAlpha);
  const double tol = 1e-10;
  r.tolerances = {{"knot_gap", tol}, {"l1_halving_ratio", {0.4, 0.6}}};
  r.columns = {"k", "knot_gap", "l1_gap", "k_times_l1_gap"};

  double worst = 0.0;
  std::vector<double> l1s;
  std::vector<double> kd;
  for (int k : ks) {
    const PolylineSignal uk = build_uk(ubar, w0, k);
    const PolylineSignal out = play_apply(build_vk(ubar, w0, rho, k), w0, rho);
    const double gap = max_knot_gap(out, uk);
    const double l1 = l1_distance(uk, ubar);
    worst = std::max(worst, gap);
    l1s.push_back(l1);
    kd.push_back(k);
    r.rows.push_back({double(k), gap, l1, k * l1});
  }
  r.checks.push_back({"play_of_vk_equals_uk", worst < tol, "max knot gap " + num(worst)});
  bool halving = true;
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] != 2 * ks[i - 1]) continue;
    const double ratio = l1s[i] / l1s[i - 1];
    halving = halving && ratio >= 0.4 && ratio <= 0.6;
  }
  r.checks.push_back({"l1_gap_halves_with_k", halving, "ratios checked where k doubles"});
  if (ks.size() >= 3) r.extra["l1_rate"] = convergence_fit(kd, l1s);
}

// ---------------------------------------------------------------- thm2_convergence

void run_thm2(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const double w0 = p.at("w0").get<double>();
  const auto ks = int_list(p, "k");
  const IntegratorOptions base = options(p);
  const FieldSet heis = FieldSet::heisenberg();
  const std::vector<StepSignal> ubar{unit_step(kSampleAlpha), unit_step(kThm2Second)};
  const double T = ubar[0].horizon();
  const Vec z0 = Vec::Zero(3);
  const double m = 2.0;
  const double u_inf = std::max(ubar[0].sup_norm(), ubar[1].sup_norm());

  r.tolerances = {{"final_over_first", 0.25}};
  r.columns = {"k", "C_k", "sup_gap", "gronwall_bound", "M_prime", "L"};
  std::vector<double> gaps;
  std::vector<double> kd;
  bool within = true;
  for (int k : ks) {
    std::vector<PolylineSignal> inputs;
    std::vector<double> seeds;
    double l1 = 0.0;
    std::vector<double> shared = merge_breakpoints(breakpoints(ubar[0]), breakpoints(ubar[1]));
    for (const auto& u : ubar) {
      inputs.push_back(build_vk(u, w0, rho, k));
      seeds.push_back(w0);
      l1 = std::max(l1, l1_distance(build_uk(u, w0, k), u));
      shared = merge_breakpoints(shared, breakpoints(play_apply(inputs.back(), w0, rho)));
    }
    // Both runs land on the same instants so their samples can be compared.
    IntegratorOptions opts = base;
    opts.extra_breakpoints = shared;
    const Trajectory ref = integrate_plain(heis, ubar, z0, opts);
    const Trajectory hyst = integrate_play_controls(heis, inputs, seeds, rho, z0, opts);
    const double gap = sup_state_gap(ref, hyst);

    const Trajectory* runs[] = {&ref, &hyst};
    const auto [m_prime, lip] = field_constants(heis, hull_box(runs, 0.1));
    const double M = std::max(m_prime, u_inf);
    const double c_k = m * m_prime * l1;
    const double bound = gronwall_bound(c_k, m, M, lip, T);
    within = within && gap <= bound;
    gaps.push_back(gap);
    kd.push_back(k);
    r.rows.push_back({double(k), c_k, gap, bound, m_prime, lip});
  }
  r.checks.push_back({"sup_gap_strictly_decreasing", strictly_decreasing(gaps), ""});
  r.checks.push_back({"final_gap_at_most_quarter_of_first", gaps.back() <= 0.25 * gaps.front(),
                      num(gaps.back()) + " vs " + num(gaps.front())});
  r.checks.push_back({"gap_within_gronwall_bound", within, ""});
  if (ks.size() >= 3) r.extra["sup_gap_rate"] = convergence_fit(kd, gaps);
}

// ---------------------------------------------------------------- fig5_density

void run_fig5(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const auto js = int_list(p, "j");
  const StepSignal slopes = unit_step(kSampleAlpha);
  const PolylineSignal x = antiderivative(slopes, 0.0);
  const double tol = 1e-10;

  double max_slope = 0.0;
  double max_reversal = 0.0;
  const auto a = slopes.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_slope = std::max(max_slope, std::abs(a[i]));
    if (i + 1 < a.size() && a[i] * a[i + 1] < 0.0) max_reversal = std::max(max_reversal, std::abs(a[i]));
  }

  r.tolerances = {{"identity", tol}};
  r.columns = {"j", "sup_error", "max_slope_over_j", "max_reversal_slope_over_j"};
  bool stated = true;
  bool reversal = true;
  std::vector<double> errs;
  std::vector<double> jd;
  for (int j : js) {
    const PolylineSignal out = play_apply(build_vj(x, rho, j), x.front(), rho);
    const double err = sup_distance(out, x);
    const double claim = max_slope / j;
    const double rev = max_reversal / j;
    stated = stated && std::abs(err - claim) <= tol;
    reversal = reversal && std::abs(err - rev) <= tol;
    errs.push_back(err);
    jd.push_back(j);
    r.rows.push_back({double(j), err, claim, rev});
  }
  r.checks.push_back({"sup_error_equals_max_slope_over_j", stated, "compares against max_i |alpha_i| / j"});
  r.checks.push_back({"sup_error_equals_max_reversal_slope_over_j", reversal,
                      "slope entering each direction reversal"});
  if (js.size() >= 3) r.extra["sup_error_rate"] = convergence_fit(jd, errs);
}

// ---------------------------------------------------------------- thm3_convergence

struct Coupling {
  const char* name;
  std::function<double(double)> f;
  double lipschitz;
};

std::vector<Coupling> couplings() {
  return {{"x", [](double x) { return x; }, 1.0}, {"sin", [](double x) { return std::sin(x); }, 1.0}};
}

void run_thm3(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const auto js = int_list(p, "j");
  const int cases = count(p, "cases");
  const IntegratorOptions opts = options(p);
  auto rng = make_rng(p);
  const double tol = 1e-8;
  r.tolerances = {{"xy_endpoint", tol}};
  r.columns = {"coupling", "case", "j", "x_error", "y_error", "z_error", "z_bound"};

  bool xy_ok = true;
  bool z_bounded = true;
  bool z_decreasing = true;
  const auto fs = couplings();
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    for (int c = 0; c < cases; ++c) {
      Vec A(3);
      Vec B(3);
      for (int i = 0; i < 3; ++i) A[i] = uniform(rng, -1.0, 1.0);
      for (int i = 0; i < 3; ++i) B[i] = uniform(rng, -1.0, 1.0);
      const double w0 = A[0] + uniform(rng, -rho, rho);
      const auto [u1, u2] = triangular_reference(fs[fi].f, A, B);
      const TriangularSpec spec = TriangularSpec::general_heisenberg(fs[fi].f, rho, w0);
      double prev = INFINITY;
      for (int j : js) {
        const ControlSchedule sched = thm3_schedule(u1, u2, A, rho, w0, j);
        const Trajectory run = integrate_play_state(spec, sched.concatenated(), A, opts);
        const Vec& Z = run.final_state();
        const double ex = std::abs(Z[0] - B[0]);
        const double ey = std::abs(Z[1] - B[1]);
        const double ez = std::abs(Z[2] - B[2]);
        const double bound = fs[fi].lipschitz * u1.horizon() * u2.sup_norm() * u1.sup_norm() / j;
        xy_ok = xy_ok && ex < tol && ey < tol;
        z_bounded = z_bounded && ez <= bound;
        z_decreasing = z_decreasing && (ez < prev || ez <= 1e-12);
        prev = ez;
        r.rows.push_back({double(fi), double(c), double(j), ex, ey, ez, bound});
      }
    }
  }
  r.extra["couplings"] = {"x", "sin"};
  r.checks.push_back({"x_y_endpoints_exact", xy_ok, ""});
  r.checks.push_back({"z_error_within_bound", z_bounded, "L T |u2|_inf max|u1| / j"});
  r.checks.push_back({"z_error_decreasing_in_j", z_decreasing, ""});
}

// ---------------------------------------------------------------- heis_exact

void run_heis_exact(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const int cases = count(p, "cases");
  const IntegratorOptions opts = options(p);
  auto rng = make_rng(p);
  const double tol = 1e-8;
  r.tolerances = {{"endpoint", tol}};
  r.columns = {"case", "endpoint_error", "phases", "duration"};

  std::vector<std::tuple<Vec, Vec, double>> runs;
  runs.emplace_back(point(p, "A", 3), point(p, "B", 3), p.at("w0").get<double>());
  for (int c = 0; c < cases; ++c) {
    Vec A(3);
    Vec B(3);
    for (int i = 0; i < 3; ++i) A[i] = uniform(rng, -1.0, 1.0);
    for (int i = 0; i < 3; ++i) B[i] = uniform(rng, -1.0, 1.0);
    runs.emplace_back(A, B, A[0] + uniform(rng, -rho, rho));
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < runs.size(); ++c) {
    const auto& [A, B, w0] = runs[c];
    const ControlSchedule sched = heis_exact_schedule(A, B, rho, w0);
    Vec end = A;
    if (!sched.empty()) {
      const TriangularSpec spec = TriangularSpec::general_heisenberg([](double x) { return x; }, rho, w0);
      end = integrate_play_state(spec, sched.concatenated(), A, opts).final_state();
    }
    const double err = (end - B).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    r.rows.push_back({double(c), err, double(sched.phases().size()), sched.total_duration()});
  }
  r.checks.push_back({"endpoint_hits_target", worst < tol, "worst error " + num(worst)});
}

// ---------------------------------------------------------------- switching_demo

struct SwitchingScenario {
  SwitchingSpec spec;
  std::vector<StepSignal> controls;
  Vec z0;
  std::vector<int> string0;
  std::vector<TrajectoryEvent> expected;
};

SwitchingSpec demo_spec(double eta) {
  std::vector<std::pair<VectorField, VectorField>> versions;
  for (Eigen::Index i = 0; i < 2; ++i) {
    versions.emplace_back([i](const Vec&) { return Vec(Vec::Unit(2, i) * 0.75); },
                          [i](const Vec&) { return Vec(Vec::Unit(2, i) * 1.25); });
  }
  return SwitchingSpec::from_versions({Vec::Unit(2, 0), Vec::Unit(2, 1)}, eta, versions, 2);
}

SwitchingScenario crossing_scenario(double eta) {
  if (!(eta > 0.0 && eta < 0.4)) throw DomainError("switching demo needs 0 < eta < 0.4");
  SwitchingScenario s{demo_spec(eta), {}, Vec(2), {-1, 1}, {}};
  s.z0 << -0.5, 0.5;
  const TimeGrid grid({0.0, 1.0, 2.0, 3.0});
  const double a = 1.2;
  s.controls = {StepSignal(grid, {a, 0.0, -a}), StepSignal(grid, {0.0, -a, 0.0})};
  // z1 rises at rate 0.75a until it passes eta, then at 1.25a.
  const double t1 = (eta - s.z0[0]) / (0.75 * a);
  const double z1_at_1 = eta + 1.25 * a * (1.0 - t1);
  const double t2 = 1.0 + (s.z0[1] + eta) / (1.25 * a);
  const double t3 = 2.0 + (z1_at_1 + eta) / (1.25 * a);
  s.expected = {{t1, 0, 0, -1, 1}, {t2, 1, 0, 1, -1}, {t3, 0, 0, 1, -1}};
  return s;
}

SwitchingScenario oscillation_scenario(double eta) {
  SwitchingScenario s{demo_spec(eta), {}, Vec::Zero(2), {-1, 1}, {}};
  const double a = 0.6 * eta;
  std::vector<double> u1;
  std::vector<double> u2;
  for (int i = 0; i < 8; ++i) {
    u1.push_back(i % 2 == 0 ? a : -a);
    u2.push_back(i % 2 == 0 ? -a : a);
  }
  s.controls = {unit_step(u1), unit_step(u2)};
  return s;
}

bool strings_in_sectors(const Trajectory& t, const SwitchingSpec& spec) {
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    const auto sectors = sector_index(t.states[i], spec);
    if (std::find(sectors.begin(), sectors.end(), t.strings[i]) == sectors.end()) return false;
  }
  return true;
}

void run_switching(const json& p, ExperimentReport& r) {
  const double eta = positive(p, "eta");
  IntegratorOptions opts = options(p);
  const double tol = 1e-9;
  r.tolerances = {{"event_time", tol}, {"step_halving", tol}};
  r.columns = {"event", "time", "expected_time", "operator_id", "old", "new"};

  const SwitchingScenario sc = crossing_scenario(eta);
  const Trajectory run = integrate_switching(sc.spec, sc.controls, sc.z0, sc.string0, opts);
  bool matches = run.events.size() == sc.expected.size();
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const auto& e = run.events[i];
    const double expected = i < sc.expected.size() ? sc.expected[i].time : NAN;
    r.rows.push_back({double(i), e.time, expected, double(e.operator_id), double(e.old_out), double(e.new_out)});
    if (i < sc.expected.size()) {
      const auto& x = sc.expected[i];
      matches = matches && e.operator_id == x.operator_id && e.old_out == x.old_out && e.new_out == x.new_out &&
                std::abs(e.time - x.time) <= tol;
    }
  }
  r.checks.push_back({"event_sequence_matches", matches, std::to_string(run.events.size()) + " events"});

  IntegratorOptions half = opts;
  half.step = 0.5 * opts.step;
  const Trajectory fine = integrate_switching(sc.spec, sc.controls, sc.z0, sc.string0, half);
  double drift = fine.events.size() == run.events.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(fine.events.size(), run.events.size()); ++i)
    drift = std::max(drift, std::abs(fine.events[i].time - run.events[i].time));
  r.checks.push_back({"event_times_stable_under_step_halving", drift <= tol, "drift " + num(drift)});

  const SwitchingScenario osc = oscillation_scenario(eta);
  const Trajectory quiet = integrate_switching(osc.spec, osc.controls, osc.z0, osc.string0, opts);
  r.checks.push_back({"no_events_inside_band", quiet.events.empty(), std::to_string(quiet.events.size()) + " events"});
  r.checks.push_back({"strings_stay_in_sectors", strings_in_sectors(run, sc.spec) && strings_in_sectors(quiet, osc.spec),
                      ""});
  json final_string = run.strings.back();
  r.extra["final_string"] = final_string;
}

// ---------------------------------------------------------------- bank_vs_truncated

PolylineSignal random_sweep(std::mt19937_64& rng) {
  const int pieces = std::uniform_int_distribution<int>(2, 8)(rng);
  std::vector<Knot> knots{{0.0, -1.5}};
  for (int i = 0; i < pieces; ++i) knots.push_back({knots.back().t + uniform(rng, 0.1, 1.0), uniform(rng, -1.5, 1.5)});
  return PolylineSignal(std::move(knots));
}

bool replay_staircase(RelayBank bank, const std::vector<SwitchEvent>& events) {
  auto outs = bank.outputs();
  for (const auto& e : events) {
    outs[e.index] = e.new_out;
    if (!RelayBank(outs.size(), outs).is_staircase()) return false;
  }
  return true;
}

struct BankScenario {
  BankSpec spec;
  std::vector<StepSignal> controls;
  Vec z0;
  std::vector<RelayBank> seeds;
  std::vector<TrajectoryEvent> expected;
};

// Two axes, four relays each: z2 climbs past 3/4, falls below -1/4, then z1
// climbs past 1/4 and 1/2.
BankScenario two_axis_scenario() {
  BankScenario s;
  s.spec.xi = {Vec::Unit(2, 0), Vec::Unit(2, 1)};
  s.spec.k = 4;
  s.spec.n = 2;
  for (Eigen::Index j = 0; j < 2; ++j)
    s.spec.fields.push_back([j](double w, const Vec&) { return Vec(Vec::Unit(2, j) * (1.0 + 0.25 * w)); });
  s.z0 = Vec(2);
  s.z0 << -0.9, 0.5;
  s.seeds = {RelayBank::uniform(4, -1), RelayBank::staircase(4, 2)};
  const TimeGrid grid({0.0, 1.0, 2.0, 3.0});
  s.controls = {StepSignal(grid, {0.0, 0.0, 2.0}), StepSignal(grid, {0.4, -1.2, 0.0})};

  // Rate factor 1 + w/4 with w = (on - off) / 4.
  const double t1 = (0.75 - 0.5) / 0.4;
  const double z2_at_1 = 0.75 + 0.4 * 1.125 * (1.0 - t1);
  const double t2 = 1.0 + (z2_at_1 + 0.25) / (1.2 * 1.125);
  const double t3 = 2.0 + (0.25 + 0.9) / (2.0 * 0.75);
  const double t4 = t3 + 0.25 / (2.0 * 0.875);
  s.expected = {{t1, 1, 2, -1, 1}, {t2, 1, 2, 1, -1}, {t3, 0, 0, -1, 1}, {t4, 0, 1, -1, 1}};
  return s;
}

void run_bank(const json& p, ExperimentReport& r) {
  const auto ks = int_list(p, "k");
  const int cases = count(p, "cases");
  const IntegratorOptions opts = options(p);
  auto rng = make_rng(p);
  const double slack = 1e-12;
  const double tol = 1e-9;
  r.tolerances = {{"gap_slack", slack}, {"event_time", tol}};
  r.columns = {"k", "max_gap", "two_over_k", "staircase_kept"};

  std::vector<PolylineSignal> inputs;
  for (int c = 0; c < cases; ++c) inputs.push_back(random_sweep(rng));
  bool bounded = true;
  bool staircase = true;
  for (int k : ks) {
    double worst = 0.0;
    bool kept = true;
    for (const auto& in : inputs) {
      const RelayBank bank = RelayBank::uniform(static_cast<std::size_t>(k), -1);
      const auto resp = bank_apply(bank, in);
      worst = std::max(worst, sup_distance(resp.output, truncated_play_apply(in, -1.0)));
      kept = kept && replay_staircase(bank, resp.events);
    }
    bounded = bounded && worst <= 2.0 / k + slack;
    staircase = staircase && kept;
    r.rows.push_back({double(k), worst, 2.0 / k, kept ? 1.0 : 0.0});
  }
  r.checks.push_back({"gap_at_most_two_over_k", bounded, ""});
  r.checks.push_back({"staircase_preserved", staircase, ""});

  // Rising sweep on four relays: switches at 1/4, 1/2, 3/4, 1 in index order.
  const PolylineSignal sweep({{0.0, -1.5}, {1.0, 1.5}});
  const auto rise = bank_apply(RelayBank::uniform(4, -1), sweep);
  bool rising = rise.events.size() == 4;
  for (std::size_t i = 0; i < rise.events.size() && rising; ++i) {
    const double level = (i + 1) / 4.0;
    rising = rise.events[i].index == i && rise.events[i].new_out == 1 &&
             std::abs(rise.events[i].time - (level + 1.5) / 3.0) <= 1e-12;
  }
  r.checks.push_back({"rising_sweep_thresholds", rising, ""});

  const BankScenario sc = two_axis_scenario();
  const Trajectory run = integrate_bank(sc.spec, sc.controls, sc.z0, sc.seeds, opts);
  bool seq = run.events.size() == sc.expected.size();
  json events = json::array();
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const auto& e = run.events[i];
    events.push_back({e.time, e.operator_id, e.relay, e.old_out, e.new_out});
    if (i < sc.expected.size()) {
      const auto& x = sc.expected[i];
      seq = seq && e.operator_id == x.operator_id && e.relay == x.relay && e.new_out == x.new_out &&
            std::abs(e.time - x.time) <= tol;
    }
  }
  r.extra["two_axis_events"] = events;
  r.checks.push_back({"two_axis_event_sequence", seq, std::to_string(run.events.size()) + " events"});
  bool staircase_run = true;
  for (const auto& s : run.strings) {
    const std::vector<int> first(s.begin(), s.begin() + 4);
    const std::vector<int> second(s.begin() + 4, s.end());
    staircase_run = staircase_run && RelayBank(4, first).is_staircase() && RelayBank(4, second).is_staircase();
  }
  r.checks.push_back({"two_axis_staircase_kept", staircase_run, ""});
}

// ---------------------------------------------------------------- chain_demo

void run_chain(const json& p, ExperimentReport& r) {
  const double rho = positive(p, "rho");
  const auto js = int_list(p, "j");
  const IntegratorOptions opts = options(p);
  const Vec A = point(p, "A", 5);
  const Vec B = point(p, "B", 5);
  const double tol = 1e-8;
  r.tolerances = {{"x_endpoint", tol}};
  r.columns = {"j", "x_error", "y4_error", "y5_error", "duration"};

  TriangularSpec spec;
  spec.m = 3;
  spec.rho = rho;
  spec.f = {[](std::span<const double> q) { return q[0]; }, [](std::span<const double> q) { return q[0] + q[1]; }};
  spec.w0 = {A[0], A[1]};

  bool x_ok = true;
  std::vector<double> y4;
  std::vector<double> y5;
  for (int j : js) {
    const ControlSchedule sched = chain_schedule(spec, A, B, j, opts);
    const Vec Z = integrate_play_state(spec, sched.concatenated(), A, opts).final_state();
    const double ex = (Z.head(3) - B.head(3)).cwiseAbs().maxCoeff();
    x_ok = x_ok && ex < tol;
    y4.push_back(std::abs(Z[3] - B[3]));
    y5.push_back(std::abs(Z[4] - B[4]));
    r.rows.push_back({double(j), ex, y4.back(), y5.back(), sched.total_duration()});
  }
  r.checks.push_back({"x_endpoints_exact", x_ok, ""});
  r.checks.push_back({"y4_error_decreasing_in_j", strictly_decreasing(y4), ""});
  r.checks.push_back({"y5_error_decreasing_in_j", strictly_decreasing(y5), ""});
}

// ---------------------------------------------------------------- registry

struct Entry {
  const char* id;
  void (*run)(const json&, ExperimentReport&);
  json defaults;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {"fig3_surjectivity", run_fig3, {{"k", {10, 20, 40}}, {"rho", 0.2}, {"w0", 0.5}}},
      {"thm2_convergence", run_thm2, {{"k", {10, 20, 40, 80}}, {"rho", 0.2}, {"w0", 0.5}, {"step", 1e-3}}},
      {"fig5_density", run_fig5, {{"j", {10, 20, 40}}, {"rho", 0.2}}},
      {"thm3_convergence", run_thm3, {{"j", {10, 20, 40}}, {"rho", 0.2}, {"step", 1e-3}, {"seed", 1}, {"cases", 3}}},
      {"heis_exact",
       run_heis_exact,
       {{"A", {0.0, 0.0, 0.0}},
        {"B", {0.0, 0.0, 1.0}},
        {"w0", 0.0},
        {"rho", 0.2},
        {"step", 1e-3},
        {"seed", 1},
        {"cases", 20}}},
      {"switching_demo", run_switching, {{"eta", 0.3}, {"step", 1e-3}}},
      {"bank_vs_truncated", run_bank, {{"k", {4, 16, 64}}, {"cases", 100}, {"seed", 1}, {"step", 1e-3}}},
      {"chain_demo",
       run_chain,
       {{"j", {10, 20, 40}},
        {"rho", 0.2},
        {"step", 1e-3},
        {"A", {0.3, -0.2, 0.1, 0.2, -0.1}},
        {"B", {-0.4, 0.5, 0.6, -0.3, 0.4}}}},
  };
  return entries;
}

const Entry& lookup(const std::string& id) {
  for (const auto& e : registry())
    if (id == e.id) return e;
  throw UnknownExperiment("unknown experiment id '" + id + "'");
}

}  // namespace

bool ExperimentReport::verdict() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& e : registry()) v.emplace_back(e.id);
    return v;
  }();
  return ids;
}

json default_params(const std::string& id) { return lookup(id).defaults; }

json resolve_params(const std::string& id, const json& overrides) {
  json params = default_params(id);
  if (overrides.is_null()) return params;
  if (!overrides.is_object()) throw DomainError("experiment parameters must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (!params.contains(key)) throw DomainError("experiment '" + id + "' has no parameter '" + key + "'");
    params[key] = value;
  }
  return params;
}

ExperimentReport run_experiment(const std::string& id, const json& overrides) {
  const Entry& entry = lookup(id);
  ExperimentReport report;
  report.id = id;
  report.params = resolve_params(id, overrides);
  report.extra = json::object();
  const auto start = std::chrono::steady_clock::now();
  try {
    entry.run(report.params, report);
  } catch (const json::exception& e) {
    throw DomainError("invalid parameter for '" + id + "': " + e.what());
  }
  report.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double convergence_fit(std::span<const double> x, std::span<const double> gap) {
  if (x.size() != gap.size() || x.size() < 3) throw DomainError("convergence fit needs at least three rows");
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(gap[i] > 0.0)) throw DomainError("convergence fit needs positive values");
    sx += std::log(x[i]);
    sy += std::log(gap[i]);
  }
  const double n = static_cast<double>(x.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(gap[i]) - my);
  }
  if (sxx == 0.0) throw DomainError("convergence fit needs distinct abscissae");
  return sxy / sxx;
}

}  // namespace hysctl
