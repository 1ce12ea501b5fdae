#include "hysctl/hysteresis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "hysctl/error.hpp"

namespace hysctl {

namespace {

constexpr double kSeedSlack = 1e-12;

bool interior_time(double t, double a, double b) {
  const double tol = kKnotTolerance * std::max(1.0, std::abs(b));
  return t > a + tol && t < b - tol;
}

// Clamp recursion w' = min(upper(u), max(lower(u), w)) on a piecewise-linear
// input. Bounds must be nondecreasing and affine in u between consecutive kinks.
template <class Lower, class Upper>
PolylineSignal apply_band(const PolylineSignal& input, double w0, Lower lower, Upper upper,
                          std::span<const double> kinks) {
  const auto in = input.knots();
  std::vector<Knot> out;
  out.reserve(2 * in.size());
  out.push_back({in.front().t, w0});
  double w = w0;

  std::vector<std::pair<double, double>> pieces;  // (t, u) including kink crossings
  for (std::size_t i = 0; i + 1 < in.size(); ++i) {
    const Knot a = in[i];
    const Knot b = in[i + 1];
    pieces.clear();
    pieces.emplace_back(a.t, a.v);
    if (a.v != b.v) {
      std::vector<std::pair<double, double>> cross;
      for (double kv : kinks) {
        if ((kv - a.v) * (kv - b.v) < 0.0) cross.emplace_back(a.t + (kv - a.v) / (b.v - a.v) * (b.t - a.t), kv);
      }
      std::sort(cross.begin(), cross.end());
      for (const auto& c : cross) {
        if (interior_time(c.first, a.t, b.t)) pieces.push_back(c);
      }
    }
    pieces.emplace_back(b.t, b.v);

    for (std::size_t p = 0; p + 1 < pieces.size(); ++p) {
      const auto [s0, u0] = pieces[p];
      const auto [s1, u1] = pieces[p + 1];
      const double next = std::min(upper(u1), std::max(lower(u1), w));
      if (u1 > u0) {
        const double l0 = lower(u0);
        const double l1 = lower(u1);
        if (l1 > w && l0 < w) {
          const double tc = s0 + (w - l0) / (l1 - l0) * (s1 - s0);
          if (interior_time(tc, s0, s1)) out.push_back({tc, w});
        }
      } else if (u1 < u0) {
        const double h0 = upper(u0);
        const double h1 = upper(u1);
        if (h1 < w && h0 > w) {
          const double tc = s0 + (h0 - w) / (h0 - h1) * (s1 - s0);
          if (interior_time(tc, s0, s1)) out.push_back({tc, w});
        }
      }
      w = next;
      out.push_back({s1, w});
    }
  }
  return PolylineSignal(std::move(out));
}

void require_relay_shape(const RelayState& r) {
  if (!(r.lo < r.hi)) throw DomainError("relay thresholds must satisfy lo < hi");
  if (r.out != 1 && r.out != -1) throw DomainError("relay output must be +1 or -1");
}

}  // namespace

// ---------------------------------------------------------------- play

PlayState play_update(PlayState state, double u_next) {
  state.w = std::min(u_next + state.rho, std::max(u_next - state.rho, state.w));
  return state;
}

PolylineSignal play_apply(const PolylineSignal& input, double w0, double rho) {
  if (!(rho >= 0.0)) throw DomainError("play half-width rho must be nonnegative");
  const double u0 = input.front();
  if (std::abs(w0 - u0) > rho + kSeedSlack * std::max(1.0, std::abs(u0))) {
    std::ostringstream os;
    os << "play seed (u0=" << u0 << ", w0=" << w0 << ") lies outside the closed strip of half-width " << rho;
    throw DomainError(os.str());
  }
  return apply_band(
      input, w0, [rho](double u) { return u - rho; }, [rho](double u) { return u + rho; }, {});
}

// ---------------------------------------------------------------- truncated play

double truncated_play_lower(double zeta) { return std::clamp(2.0 * zeta - 1.0, -1.0, 1.0); }
double truncated_play_upper(double zeta) { return std::clamp(2.0 * zeta + 1.0, -1.0, 1.0); }

TruncatedPlayState truncated_play_update(TruncatedPlayState state, double zeta_next) {
  state.w = std::min(truncated_play_upper(zeta_next), std::max(truncated_play_lower(zeta_next), state.w));
  return state;
}

PolylineSignal truncated_play_apply(const PolylineSignal& input, double w0) {
  const double z0 = input.front();
  if (w0 < truncated_play_lower(z0) - kSeedSlack || w0 > truncated_play_upper(z0) + kSeedSlack) {
    std::ostringstream os;
    os << "truncated play seed w0=" << w0 << " is not admissible at input " << z0;
    throw DomainError(os.str());
  }
  static constexpr std::array<double, 3> kinks{-1.0, 0.0, 1.0};
  return apply_band(input, w0, truncated_play_lower, truncated_play_upper, kinks);
}

// ---------------------------------------------------------------- relay

bool relay_consistent(const RelayState& r, double z) {
  const double slack = kSeedSlack * std::max(1.0, std::abs(z));
  return r.out == 1 ? z >= r.lo - slack : z <= r.hi + slack;
}

RelayStep relay_advance(const RelayState& state, double z_prev, double z_next, double t_prev, double t_next) {
  require_relay_shape(state);
  if (!relay_consistent(state, z_prev)) {
    std::ostringstream os;
    os << "relay output " << state.out << " is inconsistent with input " << z_prev << " for thresholds ("
       << state.lo << ", " << state.hi << ")";
    throw DomainError(os.str());
  }
  RelayStep step{state, std::nullopt};
  double threshold = 0.0;
  if (state.out == 1 && z_next < state.lo) {
    threshold = state.lo;
  } else if (state.out == -1 && z_next > state.hi) {
    threshold = state.hi;
  } else {
    return step;
  }
  const double frac = std::clamp((threshold - z_prev) / (z_next - z_prev), 0.0, 1.0);
  step.state.out = -state.out;
  step.event = SwitchEvent{t_prev + frac * (t_next - t_prev), 0, state.out, step.state.out};
  return step;
}

// ---------------------------------------------------------------- bank

RelayBank::RelayBank(std::size_t k, const std::vector<int>& outputs) {
  if (k == 0) throw DomainError("relay bank needs at least one relay");
  if (outputs.size() != k) throw DomainError("relay bank needs one output per relay");
  relays_.reserve(k);
  const auto kd = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double r = static_cast<double>(i + 1) / kd;
    RelayState s{-1.0 + r, r, outputs[i]};
    require_relay_shape(s);
    relays_.push_back(s);
  }
}

RelayBank RelayBank::uniform(std::size_t k, int out) { return RelayBank(k, std::vector<int>(k, out)); }

RelayBank RelayBank::staircase(std::size_t k, std::size_t on_count) {
  if (on_count > k) throw DomainError("staircase cannot switch on more relays than the bank has");
  std::vector<int> outs(k, -1);
  std::fill_n(outs.begin(), on_count, 1);
  return RelayBank(k, outs);
}

std::vector<int> RelayBank::outputs() const {
  std::vector<int> o;
  o.reserve(relays_.size());
  for (const auto& r : relays_) o.push_back(r.out);
  return o;
}

double RelayBank::output() const {
  int sum = 0;
  for (const auto& r : relays_) sum += r.out;
  return static_cast<double>(sum) / static_cast<double>(relays_.size());
}

bool RelayBank::is_staircase() const {
  for (std::size_t i = 1; i < relays_.size(); ++i)
    if (relays_[i].out > relays_[i - 1].out) return false;
  return true;
}

bool RelayBank::consistent_with(double z) const {
  return std::all_of(relays_.begin(), relays_.end(), [z](const RelayState& r) { return relay_consistent(r, z); });
}

std::vector<SwitchEvent> RelayBank::advance(double z_prev, double z_next, double t_prev, double t_next) {
  std::vector<SwitchEvent> events;
  for (std::size_t i = 0; i < relays_.size(); ++i) {
    auto step = relay_advance(relays_[i], z_prev, z_next, t_prev, t_next);
    relays_[i] = step.state;
    if (step.event) {
      step.event->index = i;
      events.push_back(*step.event);
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const SwitchEvent& a, const SwitchEvent& b) { return a.time < b.time; });
  return events;
}

BankResponse bank_apply(const RelayBank& bank, const PolylineSignal& input) {
  if (!bank.consistent_with(input.front())) throw DomainError("relay bank state is inconsistent with the input at t=0");
  RelayBank state = bank;
  std::vector<SwitchEvent> events;
  const auto knots = input.knots();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    auto seg = state.advance(knots[i].v, knots[i + 1].v, knots[i].t, knots[i + 1].t);
    events.insert(events.end(), seg.begin(), seg.end());
  }

  // Replay the events to get the staircase of macroscopic values.
  const double k = static_cast<double>(bank.size());
  int sum = 0;
  for (int o : bank.outputs()) sum += o;
  std::vector<double> pts{0.0};
  std::vector<double> vals{bank.output()};
  const double horizon = input.horizon();
  const double tol = kKnotTolerance * std::max(1.0, horizon);
  for (const auto& e : events) {
    sum += e.new_out - e.old_out;
    const double w = static_cast<double>(sum) / k;
    if (e.time <= pts.back() + tol) {
      vals.back() = w;
    } else if (e.time >= horizon - tol) {
      continue;  // switching exactly at T does not open a new interval
    } else {
      pts.push_back(e.time);
      vals.push_back(w);
    }
  }
  pts.push_back(horizon);
  return {StepSignal(TimeGrid(std::move(pts)), std::move(vals)), std::move(events), std::move(state)};
}

StaircasePreamble drive_to_staircase(const RelayBank& bank, double zeta0, double duration) {
  if (!(duration > 0.0)) throw DomainError("preamble duration must be positive");
  if (bank.is_staircase()) return {PolylineSignal::constant(duration, zeta0), bank};
  const double peak = std::max(zeta0, 1.0) + 1.0 / static_cast<double>(bank.size());
  PolylineSignal input({{0.0, zeta0}, {0.5 * duration, peak}, {duration, zeta0}});
  auto response = bank_apply(bank, input);
  return {std::move(input), std::move(response.final_state)};
}

}  // namespace hysctl
