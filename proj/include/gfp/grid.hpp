#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace gfp {

/// A real-valued function sampled at the grid nodes (length n+1).
using GridFunction = Eigen::VectorXd;

/// Uniform discretization of [0,1] with trapezoid quadrature weights.
///
/// Nodes are t_i = i/n for i = 0..n; weights are (h/2, h, ..., h, h/2)
/// with h = 1/n, so they sum to 1. Immutable after construction.
struct Grid {
  int n = 0;                // number of subintervals
  Eigen::VectorXd nodes;    // n+1 node times
  Eigen::VectorXd weights;  // n+1 trapezoid weights

  double spacing() const { return 1.0 / n; }
  int node_count() const { return n + 1; }

  /// Index of the node equal to `t`, or -1 if `t` is not a node
  /// (tolerance 1e-12 in time units).
  int node_index(double t) const {
    const double x = t * n;
    const long i = std::lround(x);
    if (i < 0 || i > n) return -1;
    if (std::abs(x - static_cast<double>(i)) > 1e-12 * n) return -1;
    return static_cast<int>(i);
  }

  /// Nearest node index to `t`, ties resolved toward 0.
  int nearest_node(double t) const {
    if (t <= 0.0) return 0;
    if (t >= 1.0) return n;
    const double x = t * n;
    double f = std::floor(x);
    int i = static_cast<int>(f);
    // tie (x - f == 0.5) rounds down
    return (x - f > 0.5) ? i + 1 : i;
  }
};

inline Grid make_grid(int n) {
  if (n < 2) {
    throw std::invalid_argument("make_grid: n must be >= 2, got " +
                                std::to_string(n));
  }
  Grid g;
  g.n = n;
  g.nodes = Eigen::VectorXd::LinSpaced(n + 1, 0.0, 1.0);
  const double h = 1.0 / n;
  g.weights = Eigen::VectorXd::Constant(n + 1, h);
  g.weights(0) = h / 2.0;
  g.weights(n) = h / 2.0;
  return g;
}

/// Trapezoid-rule integral of a node-sampled function over [0,1].
inline double quadrature(const GridFunction& f, const Grid& g) {
  if (f.size() != g.node_count()) {
    throw std::invalid_argument("quadrature: function has " +
                                std::to_string(f.size()) + " samples, grid has " +
                                std::to_string(g.node_count()) + " nodes");
  }
  return g.weights.dot(f);
}

}  // namespace gfp
