#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hysctl/hysteresis.hpp"
#include "hysctl/signals.hpp"

namespace hysctl {

using Vec = Eigen::VectorXd;
using VectorField = std::function<Vec(const Vec&)>;

/// Axis-aligned box [lo, hi] in state space.
struct Box {
  Vec lo;
  Vec hi;
};

/// Control fields g_1..g_m of a driftless system z' = sum_i g_i(z) u_i.
struct FieldSet {
  std::size_t n = 0;
  std::vector<VectorField> fields;
  /// Optional analytic constants on a box; estimated by sampling when absent.
  std::function<double(const Box&)> bound_on;
  std::function<double(const Box&)> lipschitz_on;

  std::size_t m() const noexcept { return fields.size(); }

  /// x' = u1, y' = u2, z' = x u2.
  static FieldSet heisenberg();
};

/// Chain (triangular) system with play in the state:
/// z = (x_1..x_m, y_{m+1}..y_{2m-1}), g_1 = d/dx_1,
/// g_i = d/dx_i + f_i(P[x_1], ..., P[x_{i-1}]) d/dy_{m+i-1}.
/// For m = 2 this is (x, y, z) with z' = f(P[x]) u2.
struct TriangularSpec {
  using Coupling = std::function<double(std::span<const double>)>;

  std::size_t m = 2;
  std::vector<Coupling> f;  // f[0] is f_2, ..., f[m-2] is f_m
  double rho = 0.0;
  std::vector<double> w0;  // play seeds for x_1..x_{m-1}

  std::size_t n() const noexcept { return 2 * m - 1; }

  static TriangularSpec general_heisenberg(std::function<double(double)> f, double rho, double w0);
};

/// Every field g_i switches between two versions according to a delayed
/// relay with thresholds (-eta, eta) acting on z . xi_i.
struct SwitchingSpec {
  std::vector<Vec> xi;
  double eta = 0.0;
  /// One FieldSet per m-string; entry index has bit i set when w_i = +1.
  std::vector<FieldSet> table;

  std::size_t m() const noexcept { return xi.size(); }

  /// Builds the table from per-field versions: versions[i] = {g_i^{-1}, g_i^{+1}}.
  static SwitchingSpec from_versions(std::vector<Vec> xi, double eta,
                                     const std::vector<std::pair<VectorField, VectorField>>& versions, std::size_t n);
};

/// System z' = sum_j g_j(w_k[z . xi_j], z) u_j driven by k-relay banks.
struct BankSpec {
  using BankField = std::function<Vec(double w, const Vec& z)>;

  std::vector<Vec> xi;
  std::size_t k = 1;
  std::vector<BankField> fields;
  std::size_t n = 0;

  std::size_t m() const noexcept { return xi.size(); }
};

struct IntegratorOptions {
  double step = 1e-3;
  double norm_cap = 1e6;
  /// Extra instants the integrator must land on (e.g. to share a grid with another run).
  std::vector<double> extra_breakpoints;
};

struct TrajectoryEvent {
  double time = 0.0;
  std::size_t operator_id = 0;  // axis / field index
  std::size_t relay = 0;        // relay index inside the bank (0 for a lone relay)
  int old_out = 0;
  int new_out = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  /// Play outputs (play systems) or macroscopic relay outputs per axis.
  std::vector<std::vector<double>> hysteresis;
  /// Relay outputs per sample (relay systems only), flattened axis by axis.
  std::vector<std::vector<int>> strings;
  std::vector<TrajectoryEvent> events;

  const Vec& final_state() const { return states.back(); }
};

Trajectory integrate_plain(const FieldSet& sys, std::span<const StepSignal> controls, const Vec& z0,
                           const IntegratorOptions& opts = {});

/// Play in the controls: z' = sum_i g_i(z) P[v_i, w0_i].
Trajectory integrate_play_controls(const FieldSet& sys, std::span<const PolylineSignal> inputs,
                                   std::span<const double> w0, double rho, const Vec& z0,
                                   const IntegratorOptions& opts = {});

/// Play in the state of a chain system. x-coordinates and play outputs are
/// exact polylines; the y-coordinates are integrated by fixed-step quadrature.
Trajectory integrate_play_state(const TriangularSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                                const IntegratorOptions& opts = {});

Trajectory integrate_switching(const SwitchingSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                               const std::vector<int>& initial_string, const IntegratorOptions& opts = {});

Trajectory integrate_bank(const BankSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                          const std::vector<RelayBank>& seeds, const IntegratorOptions& opts = {});

/// All m-strings admissible at z: w_i = +1 needs z.xi_i >= -eta, w_i = -1 needs z.xi_i <= eta.
std::vector<std::vector<int>> sector_index(const Vec& z, const SwitchingSpec& spec);

/// C_k * exp(m M L T).
double gronwall_bound(double c_k, double m, double M, double L, double T);

struct GronwallReport {
  double c_k = 0.0;
  double m_prime = 0.0;    // bound of the fields on the working box
  double lipschitz = 0.0;  // Lipschitz constant of the fields on the working box
  double M = 0.0;          // max(M', |u_bar|_inf)
  double bound = 0.0;
  double observed = 0.0;
  bool holds() const noexcept { return observed <= bound; }
};

/// Smallest box containing every sampled state, widened by `inflate` times its
/// half-extent on each side.
Box hull_box(std::span<const Trajectory* const> runs, double inflate = 0.1);

/// Field bound and Lipschitz constant on a box (analytic when the FieldSet
/// provides them, otherwise sampled on a grid with finite differences).
std::pair<double, double> field_constants(const FieldSet& sys, const Box& box);

/// Largest state distance between two runs sampled on the same time grid.
double sup_state_gap(const Trajectory& a, const Trajectory& b);

}  // namespace hysctl
