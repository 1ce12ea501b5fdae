#include "hysctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hysctl/error.hpp"

namespace hysctl {

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= kKnotTolerance * std::max(1.0, std::abs(b)); }

double common_horizon(std::span<const StepSignal> controls) {
  if (controls.empty()) throw DomainError("at least one control is required");
  const double T = controls.front().horizon();
  for (const auto& c : controls)
    if (!same_time(c.horizon(), T)) throw DomainError("controls must share the same horizon");
  return T;
}

void add_points(std::vector<double>& acc, std::span<const double> pts) {
  acc = merge_breakpoints(acc, pts);
}

std::vector<double> clip_breakpoints(std::vector<double> pts, std::span<const double> extra, double T) {
  std::vector<double> inside;
  for (double t : extra)
    if (t > 0.0 && t < T) inside.push_back(t);
  add_points(pts, inside);
  pts.erase(std::remove_if(pts.begin(), pts.end(), [T](double t) { return t < 0.0 || t > T; }), pts.end());
  if (pts.empty() || pts.front() != 0.0) pts.insert(pts.begin(), 0.0);
  if (same_time(pts.back(), T)) {
    pts.back() = T;
  } else {
    pts.push_back(T);
  }
  return pts;
}

std::size_t step_count(double length, double step) {
  if (!(step > 0.0)) throw DomainError("integration step must be positive");
  const double n = std::ceil(length / step - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, n));
}

template <class Rhs>
Vec rk4_step(const Rhs& rhs, double t, const Vec& z, double h) {
  const Vec k1 = rhs(t, z);
  const Vec k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1);
  const Vec k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2);
  const Vec k4 = rhs(t + h, z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_cap(const Vec& z, double cap, double t) {
  if (!z.allFinite() || z.norm() > cap) {
    std::ostringstream os;
    os << "state norm exceeded cap " << cap << " at t=" << t;
    throw DivergenceError(os.str());
  }
}

std::vector<double> midpoint_controls(std::span<const StepSignal> controls, double a, double b) {
  std::vector<double> u;
  u.reserve(controls.size());
  for (const auto& c : controls) u.push_back(c(0.5 * (a + b)));
  return u;
}

std::vector<double> control_breakpoints(std::span<const StepSignal> controls) {
  std::vector<double> pts;
  for (const auto& c : controls) add_points(pts, c.grid().points());
  return pts;
}

// Delayed relay watching z . xi[axis].
struct Channel {
  std::size_t axis = 0;
  std::size_t relay = 0;
  RelayState state;
};

bool beyond(const RelayState& r, double s) { return r.out == 1 ? s < r.lo : s > r.hi; }

std::vector<int> flatten(const std::vector<Channel>& ch) {
  std::vector<int> out;
  out.reserve(ch.size());
  for (const auto& c : ch) out.push_back(c.state.out);
  return out;
}

std::vector<double> axis_outputs(const std::vector<Channel>& ch, std::size_t axes) {
  std::vector<double> sum(axes, 0.0);
  std::vector<double> count(axes, 0.0);
  for (const auto& c : ch) {
    sum[c.axis] += c.state.out;
    count[c.axis] += 1.0;
  }
  for (std::size_t j = 0; j < axes; ++j) sum[j] /= count[j];
  return sum;
}

// Fixed-step RK4 with exact localization of delayed-relay switches.
// Rhs: (channels, z, u) -> z'.
template <class Rhs>
Trajectory integrate_relays(std::span<const StepSignal> controls, const Vec& z0, const std::vector<Vec>& xi,
                            std::vector<Channel> channels, const Rhs& field, const IntegratorOptions& opts) {
  const double T = common_horizon(controls);
  const auto pts = clip_breakpoints(control_breakpoints(controls), opts.extra_breakpoints, T);

  Trajectory traj;
  auto push = [&](double t, const Vec& z) {
    if (!traj.times.empty() && t <= traj.times.back()) {
      traj.states.back() = z;
      traj.hysteresis.back() = axis_outputs(channels, xi.size());
      traj.strings.back() = flatten(channels);
      return;
    }
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.hysteresis.push_back(axis_outputs(channels, xi.size()));
    traj.strings.push_back(flatten(channels));
  };

  Vec z = z0;
  push(0.0, z);
  for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
    const double a = pts[seg];
    const double b = pts[seg + 1];
    const auto u = midpoint_controls(controls, a, b);
    const auto rhs = [&](double, const Vec& x) { return field(channels, x, u); };
    const std::size_t n = step_count(b - a, opts.step);
    const double h = (b - a) / static_cast<double>(n);
    double t = a;
    for (std::size_t s = 0; s < n; ++s) {
      const double t_end = s + 1 == n ? b : a + static_cast<double>(s + 1) * h;
      double remaining = t_end - t;
      while (true) {
        const Vec zn = rk4_step(rhs, t, z, remaining);
        // Earliest strict threshold crossing over [t, t + remaining].
        std::optional<std::size_t> hit;
        double hit_tau = remaining;
        for (std::size_t c = 0; c < channels.size(); ++c) {
          const Vec& dir = xi[channels[c].axis];
          if (!beyond(channels[c].state, zn.dot(dir))) continue;
          double lo = 0.0;
          double hi = remaining;
          if (beyond(channels[c].state, z.dot(dir))) {
            hi = 0.0;
          } else {
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(t)); ++it) {
              const double mid = 0.5 * (lo + hi);
              if (beyond(channels[c].state, rk4_step(rhs, t, z, mid).dot(dir))) {
                hi = mid;
              } else {
                lo = mid;
              }
            }
          }
          if (!hit || hi < hit_tau) {
            hit = c;
            hit_tau = hi;
          }
        }
        if (!hit) {
          z = zn;
          t = t_end;
          check_cap(z, opts.norm_cap, t);
          push(t, z);
          break;
        }
        if (hit_tau > 0.0) z = rk4_step(rhs, t, z, hit_tau);
        t = std::min(t + hit_tau, t_end);
        check_cap(z, opts.norm_cap, t);
        auto& ch = channels[*hit];
        traj.events.push_back({t, ch.axis, ch.relay, ch.state.out, -ch.state.out});
        ch.state.out = -ch.state.out;
        push(t, z);
        remaining = t_end - t;
        if (remaining <= 1e-15 * std::max(1.0, std::abs(t_end))) {
          t = t_end;
          traj.times.back() = t_end;
          break;
        }
      }
    }
  }
  return traj;
}

void require_unit_axes(const std::vector<Vec>& xi, std::size_t n) {
  for (const auto& v : xi) {
    if (static_cast<std::size_t>(v.size()) != n) throw DomainError("switching direction has the wrong dimension");
    if (std::abs(v.norm() - 1.0) > 1e-9) throw DomainError("switching directions must be unit vectors");
  }
}

std::size_t string_code(const std::vector<Channel>& ch) {
  std::size_t code = 0;
  for (std::size_t i = 0; i < ch.size(); ++i)
    if (ch[i].state.out == 1) code |= std::size_t{1} << i;
  return code;
}

}  // namespace

// ---------------------------------------------------------------- specs

FieldSet FieldSet::heisenberg() {
  FieldSet fs;
  fs.n = 3;
  fs.fields.push_back([](const Vec&) { return Vec::Unit(3, 0); });
  fs.fields.push_back([](const Vec& z) {
    Vec g(3);
    g << 0.0, 1.0, z[0];
    return g;
  });
  fs.bound_on = [](const Box& box) {
    const double x = std::max(std::abs(box.lo[0]), std::abs(box.hi[0]));
    return std::sqrt(1.0 + x * x);
  };
  fs.lipschitz_on = [](const Box&) { return 1.0; };
  return fs;
}

TriangularSpec TriangularSpec::general_heisenberg(std::function<double(double)> f, double rho, double w0) {
  TriangularSpec spec;
  spec.m = 2;
  spec.f.push_back([f = std::move(f)](std::span<const double> p) { return f(p[0]); });
  spec.rho = rho;
  spec.w0 = {w0};
  return spec;
}

SwitchingSpec SwitchingSpec::from_versions(std::vector<Vec> xi, double eta,
                                           const std::vector<std::pair<VectorField, VectorField>>& versions,
                                           std::size_t n) {
  const std::size_t m = xi.size();
  if (versions.size() != m) throw DomainError("need one pair of field versions per switching direction");
  SwitchingSpec spec;
  spec.xi = std::move(xi);
  spec.eta = eta;
  for (std::size_t code = 0; code < (std::size_t{1} << m); ++code) {
    FieldSet fs;
    fs.n = n;
    for (std::size_t i = 0; i < m; ++i)
      fs.fields.push_back((code >> i) & 1U ? versions[i].second : versions[i].first);
    spec.table.push_back(std::move(fs));
  }
  return spec;
}

// ---------------------------------------------------------------- integrators

Trajectory integrate_plain(const FieldSet& sys, std::span<const StepSignal> controls, const Vec& z0,
                           const IntegratorOptions& opts) {
  if (controls.size() != sys.m()) throw DomainError("control count does not match the number of fields");
  if (static_cast<std::size_t>(z0.size()) != sys.n) throw DomainError("initial state has the wrong dimension");
  const double T = common_horizon(controls);
  const auto pts = clip_breakpoints(control_breakpoints(controls), opts.extra_breakpoints, T);

  Trajectory traj;
  Vec z = z0;
  traj.times.push_back(0.0);
  traj.states.push_back(z);
  for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
    const double a = pts[seg];
    const double b = pts[seg + 1];
    const auto u = midpoint_controls(controls, a, b);
    const auto rhs = [&](double, const Vec& x) {
      Vec d = Vec::Zero(static_cast<Eigen::Index>(sys.n));
      for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] != 0.0) d += sys.fields[i](x) * u[i];
      return d;
    };
    const std::size_t n = step_count(b - a, opts.step);
    const double h = (b - a) / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t0 = a + static_cast<double>(s) * h;
      z = rk4_step(rhs, t0, z, h);
      const double t1 = s + 1 == n ? b : a + static_cast<double>(s + 1) * h;
      check_cap(z, opts.norm_cap, t1);
      traj.times.push_back(t1);
      traj.states.push_back(z);
    }
  }
  return traj;
}

Trajectory integrate_play_controls(const FieldSet& sys, std::span<const PolylineSignal> inputs,
                                   std::span<const double> w0, double rho, const Vec& z0,
                                   const IntegratorOptions& opts) {
  if (inputs.size() != sys.m() || w0.size() != sys.m()) throw DomainError("need one play input and seed per field");
  if (static_cast<std::size_t>(z0.size()) != sys.n) throw DomainError("initial state has the wrong dimension");
  const double T = inputs.front().horizon();
  std::vector<PolylineSignal> outputs;
  std::vector<double> pts;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!same_time(inputs[i].horizon(), T)) throw DomainError("play inputs must share the same horizon");
    outputs.push_back(play_apply(inputs[i], w0[i], rho));
    add_points(pts, breakpoints(outputs.back()));
  }
  pts = clip_breakpoints(std::move(pts), opts.extra_breakpoints, T);

  auto played = [&](double t) {
    std::vector<double> p;
    p.reserve(outputs.size());
    for (const auto& o : outputs) p.push_back(o(std::clamp(t, 0.0, o.horizon())));
    return p;
  };
  const auto rhs = [&](double t, const Vec& x) {
    const auto p = played(t);
    Vec d = Vec::Zero(static_cast<Eigen::Index>(sys.n));
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != 0.0) d += sys.fields[i](x) * p[i];
    return d;
  };

  Trajectory traj;
  Vec z = z0;
  traj.times.push_back(0.0);
  traj.states.push_back(z);
  traj.hysteresis.push_back(played(0.0));
  for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
    const double a = pts[seg];
    const double b = pts[seg + 1];
    const std::size_t n = step_count(b - a, opts.step);
    const double h = (b - a) / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t0 = a + static_cast<double>(s) * h;
      const double t1 = s + 1 == n ? b : a + static_cast<double>(s + 1) * h;
      z = rk4_step(rhs, t0, z, t1 - t0);
      check_cap(z, opts.norm_cap, t1);
      traj.times.push_back(t1);
      traj.states.push_back(z);
      traj.hysteresis.push_back(played(t1));
    }
  }
  return traj;
}

Trajectory integrate_play_state(const TriangularSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                                const IntegratorOptions& opts) {
  const std::size_t m = spec.m;
  if (m < 2) throw DomainError("chain systems need m >= 2");
  if (controls.size() != m) throw DomainError("chain system needs m controls");
  if (spec.f.size() != m - 1 || spec.w0.size() != m - 1) throw DomainError("chain system needs m-1 couplings and seeds");
  if (static_cast<std::size_t>(z0.size()) != spec.n()) throw DomainError("initial state has the wrong dimension");
  const double T = common_horizon(controls);

  std::vector<PolylineSignal> xs;
  for (std::size_t i = 0; i < m; ++i) xs.push_back(antiderivative(controls[i], z0[static_cast<Eigen::Index>(i)]));
  std::vector<PolylineSignal> plays;
  auto pts = control_breakpoints(controls);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    plays.push_back(play_apply(xs[i], spec.w0[i], spec.rho));
    add_points(pts, breakpoints(plays.back()));
  }
  pts = clip_breakpoints(std::move(pts), opts.extra_breakpoints, T);

  auto played = [&](double t) {
    std::vector<double> p;
    p.reserve(plays.size());
    for (const auto& o : plays) p.push_back(o(std::clamp(t, 0.0, o.horizon())));
    return p;
  };
  auto assemble = [&](double t, const Vec& y) {
    Vec z(static_cast<Eigen::Index>(spec.n()));
    for (std::size_t i = 0; i < m; ++i) z[static_cast<Eigen::Index>(i)] = xs[i](std::clamp(t, 0.0, xs[i].horizon()));
    z.tail(static_cast<Eigen::Index>(m - 1)) = y;
    return z;
  };

  Trajectory traj;
  Vec y = z0.tail(static_cast<Eigen::Index>(m - 1));
  traj.times.push_back(0.0);
  traj.states.push_back(assemble(0.0, y));
  traj.hysteresis.push_back(played(0.0));
  for (std::size_t seg = 0; seg + 1 < pts.size(); ++seg) {
    const double a = pts[seg];
    const double b = pts[seg + 1];
    const auto u = midpoint_controls(controls, a, b);
    const auto rhs = [&](double t, const Vec&) {
      Vec d = Vec::Zero(static_cast<Eigen::Index>(m - 1));
      const auto p = played(t);
      for (std::size_t i = 1; i < m; ++i) {
        if (u[i] == 0.0) continue;
        d[static_cast<Eigen::Index>(i - 1)] = spec.f[i - 1](std::span<const double>(p.data(), i)) * u[i];
      }
      return d;
    };
    const std::size_t n = step_count(b - a, opts.step);
    const double h = (b - a) / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t0 = a + static_cast<double>(s) * h;
      const double t1 = s + 1 == n ? b : a + static_cast<double>(s + 1) * h;
      y = rk4_step(rhs, t0, y, t1 - t0);
      const Vec z = assemble(t1, y);
      check_cap(z, opts.norm_cap, t1);
      traj.times.push_back(t1);
      traj.states.push_back(z);
      traj.hysteresis.push_back(played(t1));
    }
  }
  return traj;
}

Trajectory integrate_switching(const SwitchingSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                               const std::vector<int>& initial_string, const IntegratorOptions& opts) {
  const std::size_t m = spec.m();
  const auto n = static_cast<std::size_t>(z0.size());
  if (!(spec.eta > 0.0)) throw DomainError("switching threshold eta must be positive");
  require_unit_axes(spec.xi, n);
  if (spec.table.size() != (std::size_t{1} << m)) throw DomainError("field table must have 2^m entries");
  for (const auto& fs : spec.table)
    if (fs.m() != m || fs.n != n) throw DomainError("field table entry has the wrong shape");
  if (controls.size() != m) throw DomainError("switching system needs one control per field");
  if (initial_string.size() != m) throw DomainError("initial string must have m entries");

  const auto admissible = sector_index(z0, spec);
  if (std::find(admissible.begin(), admissible.end(), initial_string) == admissible.end())
    throw DomainError("initial m-string is not compatible with the initial state");

  std::vector<Channel> channels;
  for (std::size_t i = 0; i < m; ++i) channels.push_back({i, 0, RelayState{-spec.eta, spec.eta, initial_string[i]}});
  const auto field = [&spec, n](const std::vector<Channel>& ch, const Vec& z, const std::vector<double>& u) {
    const FieldSet& fs = spec.table[string_code(ch)];
    Vec d = Vec::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] != 0.0) d += fs.fields[i](z) * u[i];
    return d;
  };
  return integrate_relays(controls, z0, spec.xi, std::move(channels), field, opts);
}

Trajectory integrate_bank(const BankSpec& spec, std::span<const StepSignal> controls, const Vec& z0,
                          const std::vector<RelayBank>& seeds, const IntegratorOptions& opts) {
  const std::size_t m = spec.m();
  const auto n = static_cast<std::size_t>(z0.size());
  if (spec.n != n) throw DomainError("initial state has the wrong dimension");
  require_unit_axes(spec.xi, n);
  if (spec.fields.size() != m || controls.size() != m || seeds.size() != m)
    throw DomainError("bank system needs one field, control and bank per direction");

  std::vector<Channel> channels;
  for (std::size_t j = 0; j < m; ++j) {
    if (seeds[j].size() != spec.k) throw DomainError("bank seed has the wrong number of relays");
    if (!seeds[j].consistent_with(z0.dot(spec.xi[j]))) throw DomainError("bank seed is inconsistent with the initial state");
    for (std::size_t i = 0; i < spec.k; ++i) channels.push_back({j, i, seeds[j].relays()[i]});
  }
  const auto field = [&spec, m, n](const std::vector<Channel>& ch, const Vec& z, const std::vector<double>& u) {
    const auto w = axis_outputs(ch, m);
    Vec d = Vec::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < u.size(); ++j)
      if (u[j] != 0.0) d += spec.fields[j](w[j], z) * u[j];
    return d;
  };
  return integrate_relays(controls, z0, spec.xi, std::move(channels), field, opts);
}

std::vector<std::vector<int>> sector_index(const Vec& z, const SwitchingSpec& spec) {
  const std::size_t m = spec.m();
  std::vector<std::vector<int>> out;
  for (std::size_t code = 0; code < (std::size_t{1} << m); ++code) {
    std::vector<int> s(m);
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) {
      s[i] = (code >> i) & 1U ? 1 : -1;
      const double p = z.dot(spec.xi[i]);
      ok = s[i] == 1 ? p >= -spec.eta : p <= spec.eta;
    }
    if (ok) out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- Gronwall

double gronwall_bound(double c_k, double m, double M, double L, double T) {
  if (c_k < 0.0 || m < 0.0 || M < 0.0 || L < 0.0 || T < 0.0) throw DomainError("Gronwall inputs must be nonnegative");
  if (c_k == 0.0) return 0.0;
  return c_k * std::exp(m * M * L * T);
}

Box hull_box(std::span<const Trajectory* const> runs, double inflate) {
  Box box;
  bool first = true;
  for (const Trajectory* run : runs) {
    for (const Vec& z : run->states) {
      if (first) {
        box.lo = z;
        box.hi = z;
        first = false;
      } else {
        box.lo = box.lo.cwiseMin(z);
        box.hi = box.hi.cwiseMax(z);
      }
    }
  }
  if (first) throw DomainError("cannot build a hull from empty trajectories");
  const Vec center = 0.5 * (box.lo + box.hi);
  const Vec half = (0.5 * (box.hi - box.lo)).array() * (1.0 + inflate) + 1e-9;
  return {center - half, center + half};
}

std::pair<double, double> field_constants(const FieldSet& sys, const Box& box) {
  double bound = 0.0;
  double lip = 0.0;
  if (sys.bound_on) bound = sys.bound_on(box);
  if (sys.lipschitz_on) lip = sys.lipschitz_on(box);
  if (sys.bound_on && sys.lipschitz_on) return {bound, lip};

  const auto n = static_cast<Eigen::Index>(sys.n);
  const int per_axis = sys.n <= 4 ? 5 : 3;
  std::size_t total = 1;
  for (Eigen::Index d = 0; d < n; ++d) total *= static_cast<std::size_t>(per_axis);
  double sampled_bound = 0.0;
  double sampled_lip = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec z(n);
    std::size_t rem = idx;
    for (Eigen::Index d = 0; d < n; ++d) {
      const double s = static_cast<double>(rem % static_cast<std::size_t>(per_axis)) / (per_axis - 1);
      rem /= static_cast<std::size_t>(per_axis);
      z[d] = box.lo[d] + s * (box.hi[d] - box.lo[d]);
    }
    for (const auto& g : sys.fields) {
      const Vec gz = g(z);
      sampled_bound = std::max(sampled_bound, gz.norm());
      Eigen::MatrixXd J(n, n);
      for (Eigen::Index d = 0; d < n; ++d) {
        const double h = 1e-6 * std::max(1.0, std::abs(z[d]));
        Vec zp = z;
        Vec zm = z;
        zp[d] += h;
        zm[d] -= h;
        J.col(d) = (g(zp) - g(zm)) / (2.0 * h);
      }
      sampled_lip = std::max(sampled_lip, J.norm());
    }
  }
  return {sys.bound_on ? bound : sampled_bound, sys.lipschitz_on ? lip : sampled_lip};
}

double sup_state_gap(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) throw DomainError("trajectories are not sampled on the same grid");
  double gap = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (!same_time(a.times[i], b.times[i])) throw DomainError("trajectories are not sampled on the same grid");
    gap = std::max(gap, (a.states[i] - b.states[i]).norm());
  }
  return gap;
}

}  // namespace hysctl
