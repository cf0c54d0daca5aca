#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "gfp/grid.hpp"

namespace gfp {

/// Step function on [0,1]: value values[k] on the interval
/// (breakpoints[k], breakpoints[k+1]], with breakpoints[0] = 0 and
/// breakpoints[m] = 1.
///
/// As an L2 element this is the same as the right-continuous step function
/// taking values[k] on [breakpoints[k], breakpoints[k+1]); sampling helpers
/// below use that right-continuous version, so an indicator of [0,t)
/// evaluates to 0 at t and at 1.
class StepFunction {
 public:
  StepFunction(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    validate();
  }

  /// Indicator of [0,t): 1 before t, 0 from t on. t=0 gives the zero
  /// function, t=1 the constant 1.
  static StepFunction indicator(double t) {
    if (t < 0.0 || t > 1.0) {
      throw std::invalid_argument("StepFunction::indicator: t outside [0,1]");
    }
    if (t <= 0.0) return StepFunction({0.0, 1.0}, {0.0});
    if (t >= 1.0) return StepFunction({0.0, 1.0}, {1.0});
    return StepFunction({0.0, t, 1.0}, {1.0, 0.0});
  }

  static StepFunction zero() { return StepFunction({0.0, 1.0}, {0.0}); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t piece_count() const { return values_.size(); }

  /// Right-continuous sample: value on [b_k, b_{k+1}); 0 at u >= 1.
  double value_rc(double u) const {
    if (u < 0.0 || u >= 1.0) return 0.0;
    // first breakpoint strictly greater than u
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), u);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
  }

  /// Left-continuous sample: value on (b_k, b_{k+1}]; 0 at u <= 0.
  double value_lc(double u) const {
    if (u <= 0.0 || u > 1.0) return 0.0;
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin());
    if (idx == 0) return values_[0];
    return values_[idx - 1];
  }

  /// Right-continuous samples at all grid nodes (last node samples to 0).
  GridFunction node_samples(const Grid& g) const {
    GridFunction out(g.node_count());
    for (int i = 0; i <= g.n; ++i) out(i) = value_rc(g.nodes(i));
    return out;
  }

  /// Constant value on each grid cell (t_i, t_{i+1}], i = 0..n-1.
  /// Breakpoints must lie on grid nodes for this to be exact; callers
  /// snap or validate first.
  std::vector<double> cell_values(const Grid& g) const {
    std::vector<double> out(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) out[static_cast<std::size_t>(i)] = value_lc(g.nodes(i + 1));
    return out;
  }

  /// Exact integral over [0,1].
  double integral() const {
    double s = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      s += values_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
    }
    return s;
  }

  /// Exact cumulative integral at the grid nodes (length n+1, starts at 0).
  GridFunction cumulative_at_nodes(const Grid& g) const {
    const auto cells = cell_values(g);
    const double h = g.spacing();
    GridFunction out(g.node_count());
    out(0) = 0.0;
    for (int i = 0; i < g.n; ++i) out(i + 1) = out(i) + cells[static_cast<std::size_t>(i)] * h;
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Sum of jump magnitudes, including the implicit jumps at 0 and 1
  /// (total variation of the right-continuous version extended by 0).
  double total_variation() const {
    double tv = std::abs(values_.front()) + std::abs(values_.back());
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) {
      tv += std::abs(values_[k + 1] - values_[k]);
    }
    return tv;
  }

 private:
  void validate() const {
    if (breakpoints_.size() < 2 || values_.size() + 1 != breakpoints_.size()) {
      throw std::invalid_argument("StepFunction: need m+1 breakpoints for m values");
    }
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
      throw std::invalid_argument("StepFunction: breakpoints must start at 0 and end at 1");
    }
    for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
      if (!(breakpoints_[k] < breakpoints_[k + 1])) {
        throw std::invalid_argument("StepFunction: breakpoints must be strictly increasing");
      }
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("StepFunction: non-finite value");
    }
  }

  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Node indices of the breakpoints; throws if any breakpoint is off-grid.
inline std::vector<int> breakpoint_indices(const StepFunction& e, const Grid& g) {
  std::vector<int> idx;
  idx.reserve(e.breakpoints().size());
  for (double b : e.breakpoints()) {
    int i = g.node_index(b);
    if (i < 0) {
      throw std::invalid_argument("step function breakpoint " + std::to_string(b) +
                                  " does not lie on a grid node");
    }
    idx.push_back(i);
  }
  return idx;
}

/// Snap breakpoints to the nearest grid nodes (ties toward 0), dropping
/// intervals that collapse.
inline StepFunction snap_to_grid(const StepFunction& e, const Grid& g) {
  std::vector<double> bp{0.0};
  std::vector<double> vals;
  const auto& b = e.breakpoints();
  const auto& v = e.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    double snapped = g.nodes(g.nearest_node(b[k + 1]));
    if (snapped > bp.back()) {
      bp.push_back(snapped);
      vals.push_back(v[k]);
    }
    // collapsed interval: drop it
  }
  if (bp.back() != 1.0) {
    // final breakpoint always snaps to 1; guard against pathological input
    bp.push_back(1.0);
    vals.push_back(v.back());
  }
  return StepFunction(std::move(bp), std::move(vals));
}

/// Linear combination of step functions on the union of their breakpoints.
inline StepFunction combine_steps(std::span<const double> coefficients,
                                  std::span<const StepFunction> pieces) {
  if (coefficients.size() != pieces.size() || pieces.empty()) {
    throw std::invalid_argument("combine_steps: size mismatch or empty input");
  }
  std::vector<double> bp;
  for (const auto& e : pieces) {
    bp.insert(bp.end(), e.breakpoints().begin(), e.breakpoints().end());
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  std::vector<double> vals(bp.size() - 1, 0.0);
  for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
    double right = bp[p + 1];
    double acc = 0.0;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      acc += coefficients[k] * pieces[k].value_lc(right);
    }
    vals[p] = acc;
  }
  return StepFunction(std::move(bp), std::move(vals));
}

/// L2 inner product of a step function with a node-sampled function,
/// exact in the step factor: the sampled function is integrated by the
/// trapezoid rule within each grid cell.
inline double step_l2_inner(const StepFunction& e, const GridFunction& y, const Grid& g) {
  if (y.size() != g.node_count()) {
    throw std::invalid_argument("step_l2_inner: grid mismatch");
  }
  const auto cells = e.cell_values(g);
  const double h = g.spacing();
  double s = 0.0;
  for (int i = 0; i < g.n; ++i) {
    s += cells[static_cast<std::size_t>(i)] * 0.5 * h * (y(i) + y(i + 1));
  }
  return s;
}

}  // namespace gfp
