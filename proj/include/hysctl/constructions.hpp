#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hysctl/dynamics.hpp"
#include "hysctl/signals.hpp"

namespace hysctl {

struct Phase {
  double duration = 0.0;
  std::string label;
  std::vector<StepSignal> controls;  // each defined on [0, duration]
};

/// Ordered list of control phases with a fixed control dimension.
class ControlSchedule {
public:
  explicit ControlSchedule(std::size_t dim);

  void append(Phase phase);
  void append(const ControlSchedule& other);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Phase>& phases() const noexcept { return phases_; }
  bool empty() const noexcept { return phases_.empty(); }
  double total_duration() const;
  /// Start time of every phase followed by the total duration.
  std::vector<double> boundaries() const;

  /// One StepSignal per control on [0, total_duration()]. Throws on an empty schedule.
  std::vector<StepSignal> concatenated() const;

private:
  std::size_t dim_;
  std::vector<Phase> phases_;
};

/// Phase with constant controls.
Phase constant_phase(double duration, std::string label, const std::vector<double>& u);

/// Continuous ramp approximation of a step signal, starting at w0.
PolylineSignal build_uk(const StepSignal& ubar, double w0, int k);

/// Play input whose output (seed w0, half-width rho) is build_uk(ubar, w0, k).
PolylineSignal build_vk(const StepSignal& ubar, double w0, double rho, int k);

/// Play input whose output, seeded at x(0), tracks x within max |slope| / j.
/// When v_start is given it must be the aligned start x(0) +- rho.
PolylineSignal build_vj(const PolylineSignal& x, double rho, int j, std::optional<double> v_start = std::nullopt);

/// Side (+1 or -1) of the band that build_vj starts on.
int vj_side(const PolylineSignal& x);

/// (u1, u2) = (a, 0), (0, b), (-a, 0), (0, -b) on four intervals of length T.
ControlSchedule heisenberg_loop(double alpha, double beta, double T);

/// Brings (x, P[x]) from (xA, w0) to (xA + direction*rho, xA) in unit time.
/// Only control `channel` of a `dim`-dimensional schedule is active.
ControlSchedule align_schedule(double xA, double w0, double rho, int direction, std::size_t dim = 2,
                               std::size_t channel = 0);

/// Reference pair of controls steering a general Heisenberg system
/// x' = u1, y' = u2, z' = f(x) u2 from A to B in time 3.
std::pair<StepSignal, StepSignal> triangular_reference(const std::function<double(double)>& f, const Vec& A,
                                                       const Vec& B);

/// Alignment, replay of build_vj and x-adjustment for the hysteretic system
/// z' = f(P[x, w0]) u2. ubar steers the plain system from A to B.
ControlSchedule thm3_schedule(const StepSignal& u1bar, const StepSignal& u2bar, const Vec& A, double rho, double w0,
                              int j);

/// Exact schedule for x' = u1, y' = u2, z' = P[x, w0] u2 from A to B.
ControlSchedule heis_exact_schedule(const Vec& A, const Vec& B, double rho, double w0);

/// Schedule for a chain system with play in the state (m = 2 or 3).
ControlSchedule chain_schedule(const TriangularSpec& spec, const Vec& A, const Vec& B, int j,
                               const IntegratorOptions& opts = {});

}  // namespace hysctl
