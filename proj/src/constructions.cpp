#include "hysctl/constructions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "hysctl/error.hpp"
#include "hysctl/hysteresis.hpp"

namespace hysctl {

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

double min_gap(std::span<const double> pts) {
  double g = pts.back() - pts.front();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) g = std::min(g, pts[i + 1] - pts[i]);
  return g;
}

void require_sharpness(double gap, int k, double width, const char* name) {
  if (k < 1) throw DomainError(std::string(name) + " must be a positive integer");
  if (gap * k <= width) {
    std::ostringstream os;
    os << name << "=" << k << " is too small: the smallest grid gap " << gap << " must exceed " << width << "/"
       << name;
    throw DomainError(os.str());
  }
}

double simpson(const std::function<double(double)>& g, double a, double b, int panels = 2048) {
  const double h = (b - a) / panels;
  double acc = g(a) + g(b);
  for (int i = 1; i < panels; ++i) acc += g(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Least-norm b with sum(b) = dx and sum(F_i b_i) = dy over three unit intervals.
StepSignal solve_unit_controls(const std::array<double, 3>& F, double dx, double dy) {
  Eigen::Matrix<double, 2, 3> M;
  M << 1.0, 1.0, 1.0, F[0], F[1], F[2];
  const Eigen::Vector2d rhs(dx, dy);
  const Eigen::Vector3d b = M.completeOrthogonalDecomposition().solve(rhs);
  if ((M * b - rhs).norm() > 1e-10 * (1.0 + rhs.norm()))
    throw DomainError("target is not reachable with the given coupling");
  return StepSignal(TimeGrid({0.0, 1.0, 2.0, 3.0}), {b[0], b[1], b[2]});
}

StepSignal unit_path(double from, double a, double b, double to) {
  return StepSignal(TimeGrid({0.0, 1.0, 2.0, 3.0}), {a - from, b - a, to - b});
}

std::array<double, 3> interval_integrals(const std::function<double(double)>& g) {
  return {simpson(g, 0.0, 1.0), simpson(g, 1.0, 2.0), simpson(g, 2.0, 3.0)};
}

void require_size(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << " must have " << n << " coordinates";
    throw DomainError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- schedule

ControlSchedule::ControlSchedule(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DomainError("control schedule needs at least one control");
}

void ControlSchedule::append(Phase phase) {
  if (!(phase.duration > 0.0)) throw DomainError("phase duration must be positive");
  if (phase.controls.size() != dim_) throw DomainError("phase has the wrong number of controls");
  for (const auto& c : phase.controls)
    if (std::abs(c.horizon() - phase.duration) > kKnotTolerance * std::max(1.0, phase.duration))
      throw DomainError("phase control does not span the phase duration");
  phases_.push_back(std::move(phase));
}

void ControlSchedule::append(const ControlSchedule& other) {
  if (other.dim_ != dim_) throw DomainError("cannot join schedules of different control dimension");
  for (const auto& p : other.phases_) append(p);
}

double ControlSchedule::total_duration() const {
  double T = 0.0;
  for (const auto& p : phases_) T += p.duration;
  return T;
}

std::vector<double> ControlSchedule::boundaries() const {
  std::vector<double> b{0.0};
  for (const auto& p : phases_) b.push_back(b.back() + p.duration);
  return b;
}

std::vector<StepSignal> ControlSchedule::concatenated() const {
  if (phases_.empty()) throw DomainError("empty schedule has no controls");
  std::vector<StepSignal> out = phases_.front().controls;
  for (std::size_t p = 1; p < phases_.size(); ++p)
    for (std::size_t i = 0; i < dim_; ++i) out[i] = concat(out[i], phases_[p].controls[i]);
  return out;
}

Phase constant_phase(double duration, std::string label, const std::vector<double>& u) {
  Phase p{duration, std::move(label), {}};
  for (double v : u) p.controls.push_back(StepSignal::constant(duration, v));
  return p;
}

// ---------------------------------------------------------------- input builders

PolylineSignal build_uk(const StepSignal& ubar, double w0, int k) {
  const auto t = ubar.grid().points();
  const auto a = ubar.values();
  require_sharpness(min_gap(t), k, 2.0, "k");
  const double h = 1.0 / k;
  std::vector<Knot> knots{{0.0, w0}, {h, a[0]}};
  for (std::size_t j = 1; j + 1 < t.size(); ++j) {
    knots.push_back({t[j] - h, a[j - 1]});
    knots.push_back({t[j] + h, a[j]});
  }
  knots.push_back({t.back(), a.back()});
  return PolylineSignal(std::move(knots));
}

PolylineSignal build_vk(const StepSignal& ubar, double w0, double rho, int k) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  const auto t = ubar.grid().points();
  const auto a = ubar.values();
  require_sharpness(min_gap(t), k, 3.0, "k");
  const double h = 1.0 / k;
  int s = sgn(a[0] - w0);
  std::vector<Knot> knots{{0.0, w0 + s * rho}, {h, a[0] + s * rho}};
  for (std::size_t j = 1; j + 1 < t.size(); ++j) {
    const int d = sgn(a[j] - a[j - 1]);
    if (d != 0 && d != s) {
      // Cross the strip while u is flat, then ride the other boundary.
      knots.push_back({t[j] - 2.0 * h, a[j - 1] + s * rho});
      knots.push_back({t[j] - h, a[j - 1] + d * rho});
      s = d;
    } else {
      knots.push_back({t[j] - h, a[j - 1] + s * rho});
    }
    knots.push_back({t[j] + h, a[j] + s * rho});
  }
  knots.push_back({t.back(), a.back() + s * rho});
  return PolylineSignal(std::move(knots));
}

int vj_side(const PolylineSignal& x) {
  const auto kn = x.knots();
  return kn[1].v < kn[0].v ? -1 : 1;
}

PolylineSignal build_vj(const PolylineSignal& x, double rho, int j, std::optional<double> v_start) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  const auto kn = x.knots();
  std::vector<double> t;
  t.reserve(kn.size());
  for (const auto& q : kn) t.push_back(q.t);
  require_sharpness(min_gap(t), j, 2.0, "j");
  const double h = 1.0 / j;
  int s = vj_side(x);
  const double start = kn.front().v + s * rho;
  if (v_start && std::abs(*v_start - start) > 1e-12 * std::max(1.0, std::abs(start))) {
    std::ostringstream os;
    os << "play input starts at " << *v_start << " but the aligned start is " << start;
    throw DomainError(os.str());
  }
  std::vector<Knot> out{{0.0, start}};
  for (std::size_t i = 1; i + 1 < kn.size(); ++i) {
    const int d = sgn(kn[i + 1].v - kn[i].v);
    if (d != 0 && d != s) {
      const double before = x(t[i] - h);
      const double after = x(t[i] + h);
      if (std::abs(after - before) >= 2.0 * rho) {
        std::ostringstream os;
        os << "j=" << j << " is too small for the reversal at t=" << t[i] << " (window span "
           << std::abs(after - before) << " >= 2 rho)";
        throw DomainError(os.str());
      }
      out.push_back({t[i] - h, before + s * rho});
      out.push_back({t[i] + h, after + d * rho});
      s = d;
    } else {
      out.push_back({t[i], kn[i].v + s * rho});
    }
  }
  out.push_back({t.back(), kn.back().v + s * rho});
  return PolylineSignal(std::move(out));
}

// ---------------------------------------------------------------- schedules

ControlSchedule heisenberg_loop(double alpha, double beta, double T) {
  if (!(T > 0.0)) throw DomainError("loop duration T must be positive");
  ControlSchedule s(2);
  s.append(constant_phase(T, "loop", {alpha, 0.0}));
  s.append(constant_phase(T, "loop", {0.0, beta}));
  s.append(constant_phase(T, "loop", {-alpha, 0.0}));
  s.append(constant_phase(T, "loop", {0.0, -beta}));
  return s;
}

ControlSchedule align_schedule(double xA, double w0, double rho, int direction, std::size_t dim,
                               std::size_t channel) {
  if (!(rho >= 0.0)) throw DomainError("rho must be nonnegative");
  if (direction != 1 && direction != -1) throw DomainError("alignment direction must be +1 or -1");
  if (channel >= dim) throw DomainError("alignment channel out of range");
  if (std::abs(w0 - xA) > rho + 1e-12 * std::max(1.0, std::abs(xA))) {
    std::ostringstream os;
    os << "play seed (x=" << xA << ", w=" << w0 << ") lies outside the closed strip of half-width " << rho;
    throw DomainError(os.str());
  }
  const double d = direction;
  Phase phase{1.0, "align", {}};
  for (std::size_t i = 0; i < dim; ++i) phase.controls.push_back(StepSignal::constant(1.0, 0.0));
  // One leg when the output already sits on the target side of xA.
  if (d * (w0 - xA) <= 0.0) {
    phase.controls[channel] = StepSignal::constant(1.0, d * rho);
  } else {
    phase.controls[channel] = StepSignal(TimeGrid({0.0, 0.5, 1.0}), {-2.0 * d * rho, 4.0 * d * rho});
  }
  ControlSchedule s(dim);
  s.append(std::move(phase));
  return s;
}

std::pair<StepSignal, StepSignal> triangular_reference(const std::function<double(double)>& f, const Vec& A,
                                                       const Vec& B) {
  require_size(A, 3, "start point");
  require_size(B, 3, "target point");
  StepSignal u1 = unit_path(A[0], 1.5, -1.5, B[0]);
  const PolylineSignal x = antiderivative(u1, A[0]);
  const auto F = interval_integrals([&](double t) { return f(x(t)); });
  return {std::move(u1), solve_unit_controls(F, B[1] - A[1], B[2] - A[2])};
}

ControlSchedule thm3_schedule(const StepSignal& u1bar, const StepSignal& u2bar, const Vec& A, double rho, double w0,
                              int j) {
  require_size(A, 3, "start point");
  const double T = u1bar.horizon();
  if (std::abs(u2bar.horizon() - T) > kKnotTolerance * std::max(1.0, T))
    throw DomainError("reference controls must share the same horizon");
  const PolylineSignal xbar = antiderivative(u1bar, A[0]);
  const int s = vj_side(xbar);
  ControlSchedule sched = align_schedule(A[0], w0, rho, s, 2, 0);
  const PolylineSignal v = build_vj(xbar, rho, j, A[0] + s * rho);
  sched.append(Phase{T, "replay", {derivative(v), u2bar}});
  sched.append(constant_phase(1.0, "adjust", {xbar.back() - v.back(), 0.0}));
  return sched;
}

ControlSchedule heis_exact_schedule(const Vec& A, const Vec& B, double rho, double w0) {
  require_size(A, 3, "start point");
  require_size(B, 3, "target point");
  if (!(rho >= 0.0)) throw DomainError("rho must be nonnegative");
  if (std::abs(w0 - A[0]) > rho + 1e-12 * std::max(1.0, std::abs(A[0]))) {
    std::ostringstream os;
    os << "play seed (x=" << A[0] << ", w=" << w0 << ") lies outside the closed strip of half-width " << rho;
    throw DomainError(os.str());
  }
  ControlSchedule sched(2);
  double x = A[0];
  double zbar = A[2];
  const double dy = B[1] - A[1];
  if (dy != 0.0) {
    sched.append(constant_phase(1.0, "steer_y", {0.0, dy}));
    zbar += w0 * dy;
  }
  const double delta = B[2] - zbar;
  if (delta != 0.0) {
    const int d = delta > 0.0 ? 1 : -1;
    sched.append(align_schedule(x, w0, rho, d, 2, 0));
    // Push the output by delta, cross the strip while y moves up, come back
    // along the other boundary, then undo y.
    const TimeGrid grid({0.0, 1.0, 2.0, 3.0, 4.0});
    sched.append(Phase{4.0,
                       "loop",
                       {StepSignal(grid, {delta, -2.0 * d * rho, -delta, 0.0}),
                        StepSignal(grid, {0.0, 1.0, 0.0, -1.0})}});
    x -= d * rho;
  }
  if (B[0] != x) sched.append(constant_phase(1.0, "adjust_x", {B[0] - x, 0.0}));
  return sched;
}

ControlSchedule chain_schedule(const TriangularSpec& spec, const Vec& A, const Vec& B, int j,
                               const IntegratorOptions& opts) {
  if (spec.m != 2 && spec.m != 3) throw DomainError("chain schedules support m = 2 or m = 3");
  if (spec.f.size() != spec.m - 1 || spec.w0.size() != spec.m - 1)
    throw DomainError("chain system needs m-1 couplings and seeds");
  const auto f2 = [&spec](double x1) {
    const double p[1] = {x1};
    return spec.f[0](std::span<const double>(p, 1));
  };

  if (spec.m == 2) {
    const auto [u1, u2] = triangular_reference(f2, A, B);
    return thm3_schedule(u1, u2, A, spec.rho, spec.w0[0], j);
  }

  require_size(A, 5, "start point");
  require_size(B, 5, "target point");
  const double rho = spec.rho;

  // Stage A: replay x1, x2 so that y5 and x3 reach their targets.
  const StepSignal r1 = unit_path(A[0], 1.5, -1.5, 0.0);
  const StepSignal r2 = unit_path(A[1], -1.0, 1.0, 0.0);
  const PolylineSignal x1 = antiderivative(r1, A[0]);
  const PolylineSignal x2 = antiderivative(r2, A[1]);
  const auto F = interval_integrals([&](double t) {
    const double p[2] = {x1(t), x2(t)};
    return spec.f[1](std::span<const double>(p, 2));
  });
  const StepSignal r3 = solve_unit_controls(F, B[2] - A[2], B[4] - A[4]);

  const int s1 = vj_side(x1);
  const int s2 = vj_side(x2);
  const auto al1 = align_schedule(A[0], spec.w0[0], rho, s1, 3, 0);
  const auto al2 = align_schedule(A[1], spec.w0[1], rho, s2, 3, 1);
  const PolylineSignal v1 = build_vj(x1, rho, j, A[0] + s1 * rho);
  const PolylineSignal v2 = build_vj(x2, rho, j, A[1] + s2 * rho);

  ControlSchedule sched(3);
  sched.append(Phase{1.0,
                     "align",
                     {al1.phases()[0].controls[0], al2.phases()[0].controls[1], StepSignal::constant(1.0, 0.0)}});
  sched.append(Phase{3.0, "replay", {derivative(v1), derivative(v2), r3}});

  // Stage B: fix y4 on the (x1, x2, y4) subsystem with u3 = 0.
  const auto stage_a = sched.concatenated();
  const Trajectory run = integrate_play_state(spec, stage_a, A, opts);
  const Vec& Z = run.final_state();
  Vec sub_a(3);
  sub_a << Z[0], Z[1], Z[3];
  Vec sub_b(3);
  sub_b << B[0], B[1], B[3];
  const auto [q1, q2] = triangular_reference(f2, sub_a, sub_b);
  const ControlSchedule tail = thm3_schedule(q1, q2, sub_a, rho, run.hysteresis.back()[0], j);
  for (const auto& p : tail.phases())
    sched.append(Phase{p.duration, p.label, {p.controls[0], p.controls[1], StepSignal::constant(p.duration, 0.0)}});
  return sched;
}

}  // namespace hysctl
