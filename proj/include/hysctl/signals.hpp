#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hysctl {

/// Relative tolerance under which two breakpoints are considered the same knot.
inline constexpr double kKnotTolerance = 1e-12;

/// Strictly increasing partition 0 = t_0 < t_1 < ... < t_n = T.
class TimeGrid {
public:
  explicit TimeGrid(std::vector<double> points);

  /// n equal intervals on [0, horizon].
  static TimeGrid uniform(double horizon, std::size_t intervals);

  std::span<const double> points() const noexcept { return points_; }
  double horizon() const noexcept { return points_.back(); }
  std::size_t intervals() const noexcept { return points_.size() - 1; }
  double operator[](std::size_t i) const { return points_[i]; }

  /// Index j of the interval [t_j, t_{j+1}) containing t; the last interval is
  /// closed on the right. Throws DomainError outside [0, T].
  std::size_t locate(double t) const;

private:
  std::vector<double> points_;
};

/// Piecewise-constant signal: value values[j] on [t_j, t_{j+1}).
class StepSignal {
public:
  StepSignal(TimeGrid grid, std::vector<double> values);

  static StepSignal constant(double horizon, double value);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double horizon() const noexcept { return grid_.horizon(); }

  double operator()(double t) const { return values_[grid_.locate(t)]; }

  /// Largest |value|.
  double sup_norm() const;

private:
  TimeGrid grid_;
  std::vector<double> values_;
};

struct Knot {
  double t;
  double v;
};

/// Continuous piecewise-linear signal given by its knots; affine in between.
class PolylineSignal {
public:
  explicit PolylineSignal(std::vector<Knot> knots);
  PolylineSignal(const TimeGrid& grid, std::span<const double> values);

  static PolylineSignal constant(double horizon, double value);

  std::span<const Knot> knots() const noexcept { return knots_; }
  std::size_t size() const noexcept { return knots_.size(); }
  double horizon() const noexcept { return knots_.back().t; }
  double front() const noexcept { return knots_.front().v; }
  double back() const noexcept { return knots_.back().v; }
  TimeGrid grid() const;

  double operator()(double t) const;

  /// Total variation of the signal over [0, T].
  double total_variation() const;

private:
  std::vector<Knot> knots_;
};

double evaluate(const StepSignal& s, double t);
double evaluate(const PolylineSignal& p, double t);

/// x0 + \int_0^t s, with a knot at every grid point of s.
PolylineSignal antiderivative(const StepSignal& s, double x0);

/// Slopes of p as a step signal on the knot grid of p.
StepSignal derivative(const PolylineSignal& p);

/// Sorted union of two breakpoint lists; points closer than kKnotTolerance
/// (relative) are merged.
std::vector<double> merge_breakpoints(std::span<const double> a, std::span<const double> b);

std::vector<double> breakpoints(const StepSignal& s);
std::vector<double> breakpoints(const PolylineSignal& p);

/// Same-kind signal algebra on the merged grid.
StepSignal operator+(const StepSignal& a, const StepSignal& b);
StepSignal operator-(const StepSignal& a, const StepSignal& b);
StepSignal operator*(double c, const StepSignal& a);
PolylineSignal operator+(const PolylineSignal& a, const PolylineSignal& b);
PolylineSignal operator-(const PolylineSignal& a, const PolylineSignal& b);
PolylineSignal operator*(double c, const PolylineSignal& a);

/// Places b after a on [0, Ta + Tb].
StepSignal concat(const StepSignal& a, const StepSignal& b);
/// Requires a.back() == b.front() (continuity).
PolylineSignal concat(const PolylineSignal& a, const PolylineSignal& b);

/// Restriction to [t0, t1], re-based so that the result starts at time 0.
PolylineSignal restrict(const PolylineSignal& p, double t0, double t1);
StepSignal restrict(const StepSignal& s, double t0, double t1);

/// Exact \int_0^T |a - b| and max |a - b| (one-sided limits included), computed
/// piece by piece on the merged grid.
double l1_distance(const StepSignal& a, const StepSignal& b);
double l1_distance(const StepSignal& a, const PolylineSignal& b);
double l1_distance(const PolylineSignal& a, const StepSignal& b);
double l1_distance(const PolylineSignal& a, const PolylineSignal& b);
double sup_distance(const StepSignal& a, const StepSignal& b);
double sup_distance(const StepSignal& a, const PolylineSignal& b);
double sup_distance(const PolylineSignal& a, const StepSignal& b);
double sup_distance(const PolylineSignal& a, const PolylineSignal& b);

/// Largest |a(t) - b(t)| over the merged knot set of two polylines.
double max_knot_gap(const PolylineSignal& a, const PolylineSignal& b);

}  // namespace hysctl
