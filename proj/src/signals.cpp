#include "hysctl/signals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hysctl/error.hpp"

namespace hysctl {

namespace {

bool same_knot(double a, double b) {
  return std::abs(a - b) <= kKnotTolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void require_time_in_range(double t, double horizon) {
  const double slack = kKnotTolerance * std::max(1.0, horizon);
  if (!(t >= -slack && t <= horizon + slack)) {
    std::ostringstream os;
    os << "time " << t << " outside [0, " << horizon << "]";
    throw DomainError(os.str());
  }
}

void require_same_horizon(double ta, double tb) {
  if (!same_knot(ta, tb)) {
    std::ostringstream os;
    os << "signal horizons differ: " << ta << " vs " << tb;
    throw DomainError(os.str());
  }
}

// Values of the affine piece of a signal restricted to the merged interval [a, b].
std::pair<double, double> piece_ends(const StepSignal& s, double a, double b) {
  const double v = s(0.5 * (a + b));
  return {v, v};
}

std::pair<double, double> piece_ends(const PolylineSignal& p, double a, double b) {
  return {p(a), p(b)};
}

double abs_affine_integral(double d0, double d1, double h) {
  const double a0 = std::abs(d0);
  const double a1 = std::abs(d1);
  if (d0 * d1 >= 0.0) return 0.5 * h * (a0 + a1);
  return 0.5 * h * (d0 * d0 + d1 * d1) / (a0 + a1);
}

template <class A, class B>
double l1_impl(const A& a, const B& b) {
  require_same_horizon(a.horizon(), b.horizon());
  const auto ba = breakpoints(a);
  const auto bb = breakpoints(b);
  const auto grid = merge_breakpoints(ba, bb);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t0 = grid[i];
    const double t1 = grid[i + 1];
    const auto [a0, a1] = piece_ends(a, t0, t1);
    const auto [b0, b1] = piece_ends(b, t0, t1);
    total += abs_affine_integral(a0 - b0, a1 - b1, t1 - t0);
  }
  return total;
}

template <class A, class B>
double sup_impl(const A& a, const B& b) {
  require_same_horizon(a.horizon(), b.horizon());
  const auto ba = breakpoints(a);
  const auto bb = breakpoints(b);
  const auto grid = merge_breakpoints(ba, bb);
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto [a0, a1] = piece_ends(a, grid[i], grid[i + 1]);
    const auto [b0, b1] = piece_ends(b, grid[i], grid[i + 1]);
    best = std::max({best, std::abs(a0 - b0), std::abs(a1 - b1)});
  }
  return best;
}

std::vector<double> midpoint_values(const StepSignal& s, const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) out.push_back(s(0.5 * (grid[i] + grid[i + 1])));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- TimeGrid

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw DomainError("time grid needs at least two points");
  if (points_.front() != 0.0) throw DomainError("time grid must start at 0");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw DomainError("time grid contains a non-finite point");
    if (i > 0 && !(points_[i] > points_[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t intervals) {
  if (intervals == 0 || !(horizon > 0.0)) throw DomainError("uniform grid needs T > 0 and n >= 1");
  std::vector<double> pts(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) pts[i] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
  pts.back() = horizon;
  return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::locate(double t) const {
  require_time_in_range(t, horizon());
  const auto it = std::upper_bound(points_.begin(), points_.end(), t);
  if (it == points_.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - points_.begin()) - 1;
  return std::min(idx, intervals() - 1);
}

// ---------------------------------------------------------------- StepSignal

StepSignal::StepSignal(TimeGrid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.intervals()) throw DomainError("step signal needs one value per grid interval");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("step signal value is not finite");
}

StepSignal StepSignal::constant(double horizon, double value) { return StepSignal(TimeGrid({0.0, horizon}), {value}); }

double StepSignal::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------- PolylineSignal

PolylineSignal::PolylineSignal(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw DomainError("polyline needs at least two knots");
  if (knots_.front().t != 0.0) throw DomainError("polyline must start at time 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].t) || !std::isfinite(knots_[i].v)) throw DomainError("polyline knot is not finite");
    if (i > 0 && !(knots_[i].t > knots_[i - 1].t)) throw DomainError("polyline knot times must be strictly increasing");
  }
}

PolylineSignal::PolylineSignal(const TimeGrid& grid, std::span<const double> values)
    : PolylineSignal([&] {
        if (values.size() != grid.points().size()) throw DomainError("polyline needs one value per grid point");
        std::vector<Knot> k;
        k.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) k.push_back({grid[i], values[i]});
        return k;
      }()) {}

PolylineSignal PolylineSignal::constant(double horizon, double value) {
  return PolylineSignal(std::vector<Knot>{{0.0, value}, {horizon, value}});
}

TimeGrid PolylineSignal::grid() const {
  std::vector<double> pts;
  pts.reserve(knots_.size());
  for (const auto& k : knots_) pts.push_back(k.t);
  return TimeGrid(std::move(pts));
}

double PolylineSignal::operator()(double t) const {
  require_time_in_range(t, horizon());
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double x, const Knot& k) { return x < k.t; });
  if (it == knots_.begin()) return knots_.front().v;
  if (it == knots_.end()) return knots_.back().v;
  const Knot& r = *it;
  const Knot& l = *(it - 1);
  const double s = (t - l.t) / (r.t - l.t);
  return l.v + s * (r.v - l.v);
}

double PolylineSignal::total_variation() const {
  double tv = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) tv += std::abs(knots_[i].v - knots_[i - 1].v);
  return tv;
}

// ---------------------------------------------------------------- free functions

double evaluate(const StepSignal& s, double t) { return s(t); }
double evaluate(const PolylineSignal& p, double t) { return p(t); }

PolylineSignal antiderivative(const StepSignal& s, double x0) {
  const auto pts = s.grid().points();
  std::vector<Knot> knots;
  knots.reserve(pts.size());
  double x = x0;
  knots.push_back({pts[0], x});
  for (std::size_t j = 0; j < s.values().size(); ++j) {
    x += s.values()[j] * (pts[j + 1] - pts[j]);
    knots.push_back({pts[j + 1], x});
  }
  return PolylineSignal(std::move(knots));
}

StepSignal derivative(const PolylineSignal& p) {
  const auto k = p.knots();
  std::vector<double> slopes;
  slopes.reserve(k.size() - 1);
  for (std::size_t i = 0; i + 1 < k.size(); ++i) slopes.push_back((k[i + 1].v - k[i].v) / (k[i + 1].t - k[i].t));
  return StepSignal(p.grid(), std::move(slopes));
}

std::vector<double> merge_breakpoints(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  out.reserve(all.size());
  for (double t : all) {
    if (out.empty() || !same_knot(out.back(), t)) out.push_back(t);
  }
  // Keep the exact horizon of the inputs as the last point.
  if (!all.empty()) out.back() = all.back();
  return out;
}

std::vector<double> breakpoints(const StepSignal& s) {
  const auto p = s.grid().points();
  return {p.begin(), p.end()};
}

std::vector<double> breakpoints(const PolylineSignal& p) {
  std::vector<double> out;
  out.reserve(p.size());
  for (const auto& k : p.knots()) out.push_back(k.t);
  return out;
}

StepSignal operator+(const StepSignal& a, const StepSignal& b) {
  require_same_horizon(a.horizon(), b.horizon());
  auto grid = merge_breakpoints(breakpoints(a), breakpoints(b));
  auto va = midpoint_values(a, grid);
  const auto vb = midpoint_values(b, grid);
  for (std::size_t i = 0; i < va.size(); ++i) va[i] += vb[i];
  return StepSignal(TimeGrid(std::move(grid)), std::move(va));
}

StepSignal operator*(double c, const StepSignal& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= c;
  return StepSignal(a.grid(), std::move(v));
}

StepSignal operator-(const StepSignal& a, const StepSignal& b) { return a + (-1.0) * b; }

PolylineSignal operator+(const PolylineSignal& a, const PolylineSignal& b) {
  require_same_horizon(a.horizon(), b.horizon());
  const auto grid = merge_breakpoints(breakpoints(a), breakpoints(b));
  std::vector<Knot> knots;
  knots.reserve(grid.size());
  for (double t : grid) knots.push_back({t, a(t) + b(t)});
  return PolylineSignal(std::move(knots));
}

PolylineSignal operator*(double c, const PolylineSignal& a) {
  std::vector<Knot> knots(a.knots().begin(), a.knots().end());
  for (auto& k : knots) k.v *= c;
  return PolylineSignal(std::move(knots));
}

PolylineSignal operator-(const PolylineSignal& a, const PolylineSignal& b) { return a + (-1.0) * b; }

StepSignal concat(const StepSignal& a, const StepSignal& b) {
  std::vector<double> pts = breakpoints(a);
  const double offset = a.horizon();
  const auto pb = b.grid().points();
  for (std::size_t i = 1; i < pb.size(); ++i) pts.push_back(offset + pb[i]);
  std::vector<double> vals(a.values().begin(), a.values().end());
  vals.insert(vals.end(), b.values().begin(), b.values().end());
  return StepSignal(TimeGrid(std::move(pts)), std::move(vals));
}

PolylineSignal concat(const PolylineSignal& a, const PolylineSignal& b) {
  const double gap = std::abs(a.back() - b.front());
  if (gap > 1e-9 * std::max(1.0, std::abs(a.back()))) throw DomainError("polyline concatenation would be discontinuous");
  std::vector<Knot> knots(a.knots().begin(), a.knots().end());
  const double offset = a.horizon();
  const auto kb = b.knots();
  for (std::size_t i = 1; i < kb.size(); ++i) knots.push_back({offset + kb[i].t, kb[i].v});
  return PolylineSignal(std::move(knots));
}

PolylineSignal restrict(const PolylineSignal& p, double t0, double t1) {
  require_time_in_range(t0, p.horizon());
  require_time_in_range(t1, p.horizon());
  if (!(t1 > t0)) throw DomainError("restriction needs t0 < t1");
  std::vector<Knot> knots{{0.0, p(t0)}};
  for (const auto& k : p.knots()) {
    if (k.t > t0 && k.t < t1 && !same_knot(k.t, t0) && !same_knot(k.t, t1)) knots.push_back({k.t - t0, k.v});
  }
  knots.push_back({t1 - t0, p(t1)});
  return PolylineSignal(std::move(knots));
}

StepSignal restrict(const StepSignal& s, double t0, double t1) {
  require_time_in_range(t0, s.horizon());
  require_time_in_range(t1, s.horizon());
  if (!(t1 > t0)) throw DomainError("restriction needs t0 < t1");
  std::vector<double> pts{t0};
  for (double t : s.grid().points())
    if (t > t0 && t < t1 && !same_knot(t, t0) && !same_knot(t, t1)) pts.push_back(t);
  pts.push_back(t1);
  const auto vals = midpoint_values(s, pts);
  for (double& t : pts) t -= t0;
  return StepSignal(TimeGrid(std::move(pts)), vals);
}

double l1_distance(const StepSignal& a, const StepSignal& b) { return l1_impl(a, b); }
double l1_distance(const StepSignal& a, const PolylineSignal& b) { return l1_impl(a, b); }
double l1_distance(const PolylineSignal& a, const StepSignal& b) { return l1_impl(a, b); }
double l1_distance(const PolylineSignal& a, const PolylineSignal& b) { return l1_impl(a, b); }
double sup_distance(const StepSignal& a, const StepSignal& b) { return sup_impl(a, b); }
double sup_distance(const StepSignal& a, const PolylineSignal& b) { return sup_impl(a, b); }
double sup_distance(const PolylineSignal& a, const StepSignal& b) { return sup_impl(a, b); }
double sup_distance(const PolylineSignal& a, const PolylineSignal& b) { return sup_impl(a, b); }

double max_knot_gap(const PolylineSignal& a, const PolylineSignal& b) {
  require_same_horizon(a.horizon(), b.horizon());
  double best = 0.0;
  for (double t : merge_breakpoints(breakpoints(a), breakpoints(b))) best = std::max(best, std::abs(a(t) - b(t)));
  return best;
}

}  // namespace hysctl
