#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hysctl/signals.hpp"

namespace hysctl {

// ---------------------------------------------------------------- play

/// Scalar play (backlash) operator with half-width rho and current output w.
struct PlayState {
  double rho = 0.0;
  double w = 0.0;
};

/// One step of the play along a monotone input move ending at u_next:
/// w' = min(u_next + rho, max(u_next - rho, w)).
PlayState play_update(PlayState state, double u_next);

/// Play output for a piecewise-linear input. Output knots are the input knots
/// plus the instants where the pair (u, w) moves between the interior of the
/// strip |u - w| < rho and its boundary, so the result is exact.
/// Requires |w0 - input(0)| <= rho.
PolylineSignal play_apply(const PolylineSignal& input, double w0, double rho);

// ---------------------------------------------------------------- truncated play

/// Output of the continuum relay superposition in its staircase loop:
/// a play of slope 2 saturated at +-1.
struct TruncatedPlayState {
  double w = 0.0;
};

/// Lower and upper branches of the truncated play loop at input zeta.
double truncated_play_lower(double zeta);
double truncated_play_upper(double zeta);

TruncatedPlayState truncated_play_update(TruncatedPlayState state, double zeta_next);

/// Requires truncated_play_lower(input(0)) <= w0 <= truncated_play_upper(input(0)).
PolylineSignal truncated_play_apply(const PolylineSignal& input, double w0);

// ---------------------------------------------------------------- delayed relay

/// Delayed relay with thresholds lo < hi and output in {-1, +1}. Switches down
/// only when the input is strictly below lo, up only when strictly above hi.
struct RelayState {
  double lo = -1.0;
  double hi = 1.0;
  int out = -1;
};

struct SwitchEvent {
  double time = 0.0;
  std::size_t index = 0;  // relay index inside its bank (0 for a lone relay)
  int old_out = 0;
  int new_out = 0;
};

struct RelayStep {
  RelayState state;
  std::optional<SwitchEvent> event;
};

/// True when (z, out) is an admissible relay configuration.
bool relay_consistent(const RelayState& r, double z);

/// Advances the relay while its input moves affinely from z_prev (at t_prev) to
/// z_next (at t_next). At most one switch can happen; the event carries the
/// time at which the input crosses the threshold.
RelayStep relay_advance(const RelayState& state, double z_prev, double z_next, double t_prev = 0.0,
                        double t_next = 1.0);

/// Ordered bank of k delayed relays; relay i (0-based) has thresholds
/// (-1 + (i+1)/k, (i+1)/k). Its macroscopic output is the mean of the relay outputs.
class RelayBank {
public:
  RelayBank(std::size_t k, const std::vector<int>& outputs);

  static RelayBank uniform(std::size_t k, int out);
  /// First on_count relays at +1, the rest at -1.
  static RelayBank staircase(std::size_t k, std::size_t on_count);

  std::size_t size() const noexcept { return relays_.size(); }
  const std::vector<RelayState>& relays() const noexcept { return relays_; }
  std::vector<int> outputs() const;
  double output() const;

  /// Outputs of the form (+1, ..., +1, -1, ..., -1).
  bool is_staircase() const;
  bool consistent_with(double z) const;

  /// Moves every relay (in index order) along an affine input segment and
  /// returns the switch events sorted by time.
  std::vector<SwitchEvent> advance(double z_prev, double z_next, double t_prev, double t_next);

private:
  std::vector<RelayState> relays_;
};

struct BankResponse {
  StepSignal output;  // macroscopic output w_k, breakpoints at switch times
  std::vector<SwitchEvent> events;
  RelayBank final_state;
};

BankResponse bank_apply(const RelayBank& bank, const PolylineSignal& input);

struct StaircasePreamble {
  PolylineSignal input;  // zeta0 -> beyond +1 -> zeta0, or constant when not needed
  RelayBank bank;        // bank state at the end of the preamble
};

/// Input excursion that puts an arbitrary bank into its staircase loop by
/// driving the input strictly above 1 and back to zeta0.
StaircasePreamble drive_to_staircase(const RelayBank& bank, double zeta0, double duration = 1.0);

}  // namespace hysctl
