// Acceptance runner: one PASS/FAIL line per criterion. `--only N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hysctl/constructions.hpp"
#include "hysctl/dynamics.hpp"
#include "hysctl/experiments.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/signals.hpp"
#include "properties.hpp"

using namespace hysctl;

namespace {

// Pinned tolerances and time limits.
constexpr double kSurjectivityTol = 1e-10;
constexpr double kLoopReturnTol = 1e-9;
constexpr double kLoopLiftTol = 1e-8;
constexpr double kQuarter = 0.25;
constexpr double kDensityTol = 1e-10;
constexpr double kEndpointTol = 1e-8;
constexpr double kBankSlack = 1e-12;
constexpr double kSweepTimeTol = 1e-12;
constexpr double kEventTol = 1e-9;
constexpr double kStep = 1e-3;
constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double limit;  // seconds; 0 for none
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

StepSignal unit_step(const std::vector<double>& v) {
  return StepSignal(TimeGrid::uniform(static_cast<double>(v.size()), v.size()), v);
}

const std::vector<double> kAlpha{1.0, -1.0, 0.5, 2.0};

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Vec random_point(std::mt19937_64& rng) {
  Vec v(3);
  for (int i = 0; i < 3; ++i) v[i] = uniform(rng, -1.0, 1.0);
  return v;
}

std::size_t col(const ExperimentReport& r, const std::string& name) {
  const auto it = std::find(r.columns.begin(), r.columns.end(), name);
  if (it == r.columns.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - r.columns.begin());
}

bool check_passed(const ExperimentReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c.pass;
  throw std::runtime_error("missing check " + name);
}

Outcome surjectivity() {
  const StepSignal ubar = unit_step(kAlpha);
  double worst = 0.0;
  for (int k : {10, 20, 40}) {
    const auto out = play_apply(build_vk(ubar, 0.5, 0.2, k), 0.5, 0.2);
    worst = std::max(worst, max_knot_gap(out, build_uk(ubar, 0.5, k)));
  }
  return {worst < kSurjectivityTol, "max knot gap " + fmt(worst)};
}

Outcome bracket() {
  std::mt19937_64 rng(kSeed);
  const FieldSet heis = FieldSet::heisenberg();
  IntegratorOptions o;
  o.step = kStep;
  double ret = 0.0;
  double lift = 0.0;
  for (int c = 0; c < 100; ++c) {
    const double a = uniform(rng, -2.0, 2.0);
    const double b = uniform(rng, -2.0, 2.0);
    const double T = uniform(rng, 0.1, 1.0);
    const Vec A = random_point(rng);
    const Vec Z = integrate_plain(heis, heisenberg_loop(a, b, T).concatenated(), A, o).final_state();
    ret = std::max({ret, std::abs(Z[0] - A[0]), std::abs(Z[1] - A[1])});
    lift = std::max(lift, std::abs(Z[2] - A[2] - T * T * a * b));
  }
  return {ret < kLoopReturnTol && lift < kLoopLiftTol, "x,y return " + fmt(ret) + ", dz error " + fmt(lift)};
}

Outcome convergence() {
  const auto r = run_experiment("thm2_convergence", {{"k", {10, 20, 40, 80}}, {"rho", 0.2}, {"w0", 0.5}, {"step", kStep}});
  const auto g = col(r, "sup_gap");
  const auto b = col(r, "gronwall_bound");
  bool decreasing = true;
  bool bounded = true;
  std::string gaps;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i > 0) decreasing = decreasing && r.rows[i][g] < r.rows[i - 1][g];
    bounded = bounded && r.rows[i][g] <= r.rows[i][b];
    gaps += (i ? ", " : "") + fmt(r.rows[i][g]);
  }
  const bool quarter = r.rows.back()[g] <= kQuarter * r.rows.front()[g];
  return {r.rows.size() == 4 && decreasing && bounded && quarter,
          "gaps " + gaps + (bounded ? ", all within Gronwall bound" : ", Gronwall bound violated")};
}

Outcome density() {
  const StepSignal slopes = unit_step(kAlpha);
  const PolylineSignal x = antiderivative(slopes, 0.0);
  const double max_alpha = slopes.sup_norm();
  Outcome o;
  std::string errs;
  for (int j : {10, 20, 40}) {
    const double err = sup_distance(play_apply(build_vj(x, 0.2, j), x.front(), 0.2), x);
    o.pass = o.pass && std::abs(err - max_alpha / j) <= kDensityTol;
    errs += (errs.empty() ? "" : ", ") + fmt(err) + " vs " + fmt(max_alpha / j);
  }
  o.detail = "sup error " + errs;
  return o;
}

Outcome theorem3() {
  std::mt19937_64 rng(kSeed + 1);
  IntegratorOptions o;
  o.step = kStep;
  const double rho = 0.2;
  struct F {
    std::function<double(double)> f;
    double L;
  };
  const std::vector<F> fs{{[](double v) { return v; }, 1.0}, {[](double v) { return std::sin(v); }, 1.0}};
  double xy = 0.0;
  bool bounded = true;
  bool decreasing = true;
  int runs = 0;
  for (const auto& f : fs) {
    for (int c = 0; c < 4; ++c) {
      const Vec A = random_point(rng);
      const Vec B = random_point(rng);
      const double w0 = A[0] + uniform(rng, -rho, rho);
      const auto [u1, u2] = triangular_reference(f.f, A, B);
      const auto spec = TriangularSpec::general_heisenberg(f.f, rho, w0);
      double prev = INFINITY;
      for (int j : {10, 20, 40}) {
        const Vec Z = integrate_play_state(spec, thm3_schedule(u1, u2, A, rho, w0, j).concatenated(), A, o).final_state();
        xy = std::max({xy, std::abs(Z[0] - B[0]), std::abs(Z[1] - B[1])});
        const double ez = std::abs(Z[2] - B[2]);
        bounded = bounded && ez <= f.L * u1.horizon() * u2.sup_norm() * u1.sup_norm() / j;
        decreasing = decreasing && ez < prev;
        prev = ez;
        ++runs;
      }
    }
  }
  return {xy < kEndpointTol && bounded && decreasing,
          std::to_string(runs) + " runs, x/y error " + fmt(xy) + (bounded ? ", z within bound" : ", z bound violated") +
              (decreasing ? ", z decreasing" : ", z not decreasing")};
}

Outcome exact_heisenberg() {
  std::mt19937_64 rng(kSeed + 2);
  IntegratorOptions o;
  o.step = kStep;
  const double rho = 0.2;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const Vec A = random_point(rng);
    const Vec B = random_point(rng);
    const double w0 = A[0] + uniform(rng, -rho, rho);
    const auto sched = heis_exact_schedule(A, B, rho, w0);
    Vec Z = A;
    if (!sched.empty()) {
      const auto spec = TriangularSpec::general_heisenberg([](double v) { return v; }, rho, w0);
      Z = integrate_play_state(spec, sched.concatenated(), A, o).final_state();
    }
    worst = std::max(worst, (Z - B).cwiseAbs().maxCoeff());
  }
  return {worst < kEndpointTol, "worst endpoint error " + fmt(worst)};
}

Outcome axioms() {
  Outcome o;
  for (const auto& r : props::operator_axioms()) {
    o.pass = o.pass && r.failures == 0;
    o.detail += (o.detail.empty() ? "" : ", ") + r.name + " " + std::to_string(r.failures) + "/" +
                std::to_string(r.cases);
  }
  return o;
}

Outcome bank() {
  std::mt19937_64 rng(kSeed + 3);
  std::vector<PolylineSignal> inputs;
  for (int c = 0; c < 100; ++c) {
    const int pieces = 2 + static_cast<int>(rng() % 7);
    std::vector<Knot> kn{{0.0, -1.5}};
    for (int i = 0; i < pieces; ++i) kn.push_back({kn.back().t + uniform(rng, 0.1, 1.0), uniform(rng, -1.5, 1.5)});
    inputs.emplace_back(std::move(kn));
  }
  bool bounded = true;
  std::string gaps;
  for (std::size_t k : {4u, 16u, 64u}) {
    double worst = 0.0;
    for (const auto& u : inputs)
      worst = std::max(worst, sup_distance(bank_apply(RelayBank::uniform(k, -1), u).output, truncated_play_apply(u, -1.0)));
    bounded = bounded && worst <= 2.0 / static_cast<double>(k) + kBankSlack;
    gaps += (gaps.empty() ? "" : ", ") + fmt(worst, 6) + "<=" + fmt(2.0 / static_cast<double>(k), 6);
  }
  // Rising sweep through the four thresholds 1/4, 1/2, 3/4, 1.
  const PolylineSignal sweep({{0.0, -1.5}, {3.0, 1.5}});
  const auto ev = bank_apply(RelayBank::uniform(4, -1), sweep).events;
  bool sweep_ok = ev.size() == 4;
  for (std::size_t i = 0; sweep_ok && i < 4; ++i) {
    const double threshold = static_cast<double>(i + 1) / 4.0;
    sweep_ok = ev[i].index == i && ev[i].old_out == -1 && ev[i].new_out == 1 &&
               std::abs(ev[i].time - (threshold + 1.5)) <= kSweepTimeTol;
  }
  const bool two_axis = check_passed(run_experiment("bank_vs_truncated", {{"k", {4}}, {"cases", 0}}), "two_axis_event_sequence");
  return {bounded && sweep_ok && two_axis, "gaps " + gaps + (sweep_ok ? ", sweep matches" : ", sweep mismatch") +
                                           (two_axis ? ", two-axis sequence matches" : ", two-axis sequence mismatch")};
}

Outcome switching() {
  const double eta = 0.3;
  const double a = 1.2;
  // Scripted crossings: start (-0.5, 0.5), slow speed 0.75, fast speed 1.25.
  const double t1 = (eta + 0.5) / (0.75 * a);
  const double z1 = eta + 1.25 * a * (1.0 - t1);
  const double t2 = 1.0 + (0.5 + eta) / (1.25 * a);
  const double t3 = 2.0 + (z1 + eta) / (1.25 * a);
  struct E {
    double t;
    double axis;
    double from;
    double to;
  };
  const std::vector<E> expected{{t1, 0, -1, 1}, {t2, 1, 1, -1}, {t3, 0, 1, -1}};

  const auto coarse = run_experiment("switching_demo", {{"eta", eta}, {"step", kStep}});
  const auto fine = run_experiment("switching_demo", {{"eta", eta}, {"step", kStep / 2}});
  const auto tc = col(coarse, "time");
  const auto oc = col(coarse, "operator_id");
  const auto fc = col(coarse, "old");
  const auto nc = col(coarse, "new");
  bool seq = coarse.rows.size() == expected.size() && fine.rows.size() == expected.size();
  double drift = 0.0;
  double miss = 0.0;
  for (std::size_t i = 0; seq && i < expected.size(); ++i) {
    const auto& row = coarse.rows[i];
    seq = row[oc] == expected[i].axis && row[fc] == expected[i].from && row[nc] == expected[i].to;
    miss = std::max(miss, std::abs(row[tc] - expected[i].t));
    drift = std::max(drift, std::abs(row[tc] - fine.rows[i][tc]));
  }
  const bool quiet = check_passed(coarse, "no_events_inside_band");
  return {seq && miss <= kEventTol && drift <= kEventTol && quiet,
          std::to_string(coarse.rows.size()) + " events, time error " + fmt(miss) + ", halving drift " + fmt(drift) +
              (quiet ? ", no events inside band" : ", spurious events inside band")};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }
  const std::vector<Criterion> all{
      {1, "surjectivity identity", 1.0, surjectivity},
      {2, "bracket displacement", 5.0, bracket},
      {3, "play-in-controls convergence", 10.0, convergence},
      {4, "density identity", 1.0, density},
      {5, "hysteretic triangular endpoints", 10.0, theorem3},
      {6, "exact hysteretic Heisenberg", 10.0, exact_heisenberg},
      {7, "operator axioms", 0.0, axioms},
      {8, "bank approximation", 5.0, bank},
      {9, "switching semantics", 2.0, switching},
  };
  if (only != 0 && (only < 1 || only > static_cast<int>(all.size()))) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }

  bool ok = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit <= 0.0 || secs < c.limit;
    const bool pass = o.pass && in_time;
    ok = ok && pass;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.title << "  (" << o.detail
              << ")  [" << fmt(secs) << " s" << (c.limit > 0.0 ? " / limit " + fmt(c.limit) + " s" : "")
              << (in_time ? "" : ", too slow") << "]\n";
  }
  return ok ? 0 : 1;
}
