#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "gfp/errors.hpp"
#include "gfp/grid.hpp"
#include "gfp/step_function.hpp"

namespace gfp {

/// Closed-form kernels with known bounded-variation structure.
enum class CatalogKernel { BrownianMotion, BridgeOrthogonal, BridgeCanonical, Martingale };

inline std::string catalog_kernel_name(CatalogKernel k) {
  switch (k) {
    case CatalogKernel::BrownianMotion: return "bm";
    case CatalogKernel::BridgeOrthogonal: return "bridge_orthogonal";
    case CatalogKernel::BridgeCanonical: return "bridge_canonical";
    case CatalogKernel::Martingale: return "martingale";
  }
  throw std::invalid_argument("catalog_kernel_name: unknown kernel");
}

inline CatalogKernel catalog_kernel_from_name(const std::string& name) {
  if (name == "bm") return CatalogKernel::BrownianMotion;
  if (name == "bridge_orthogonal") return CatalogKernel::BridgeOrthogonal;
  if (name == "bridge_canonical") return CatalogKernel::BridgeCanonical;
  if (name == "martingale") return CatalogKernel::Martingale;
  throw std::invalid_argument("unknown catalog kernel name: " + name);
}

/// Measure representation of a kernel's first-argument variation,
/// one measure K(du, s_j) per grid node s_j:
///
///   K(du, s_j) = atom_weight(j) * delta_{atom_location(j)}(du)
///              + density(j, .) du
///
/// Density rows hold node samples; the density is piecewise constant with
/// the value on cell (t_i, t_{i+1}] given by the sample at node i+1
/// (right-endpoint cell rule), so integrals against step functions are
/// exact. atom_weight(j) == 0 means no atom at s_j.
struct BvMeasure {
  Eigen::VectorXd atom_location;
  Eigen::VectorXd atom_weight;
  Eigen::MatrixXd density;  // (n+1) x (n+1), row j = density of K(du, s_j)
};

/// A two-argument kernel sampled on the grid: matrix(i,j) = K(t_i, s_j).
struct Kernel {
  Grid grid;
  Eigen::MatrixXd matrix;
  std::optional<CatalogKernel> closed_form;
  std::optional<BvMeasure> bv;

  void validate() const {
    if (matrix.rows() != grid.node_count() || matrix.cols() != grid.node_count()) {
      throw std::invalid_argument("Kernel: matrix dimensions do not match grid");
    }
    if (!matrix.allFinite()) {
      throw std::invalid_argument("Kernel: non-finite matrix entry");
    }
  }
};

/// Integral operator associated with the kernel:
/// (Tf)(t_i) = sum_j w_j K(t_i, s_j) f(s_j).
inline GridFunction apply_operator(const Kernel& k, const GridFunction& f) {
  if (f.size() != k.grid.node_count()) {
    throw std::invalid_argument("apply_operator: grid mismatch");
  }
  return k.matrix * k.grid.weights.cwiseProduct(f);
}

/// Adjoint image of a step function, evaluated exactly from matrix rows:
/// (T*e)(s) = sum_k a_k (K(b_k, s) - K(b_{k-1}, s)).
/// Breakpoints are snapped to the nearest grid nodes first.
inline GridFunction adjoint_apply(const Kernel& k, const StepFunction& e) {
  const StepFunction snapped = snap_to_grid(e, k.grid);
  const auto idx = breakpoint_indices(snapped, k.grid);
  const auto& vals = snapped.values();
  GridFunction out = GridFunction::Zero(k.grid.node_count());
  for (std::size_t p = 0; p < vals.size(); ++p) {
    if (vals[p] == 0.0) continue;
    out += vals[p] * (k.matrix.row(idx[p + 1]) - k.matrix.row(idx[p])).transpose();
  }
  return out;
}

/// Inner product on the integrand space:
/// <e1, e2> = int_0^1 (T*e1)(u) (T*e2)(u) du, by trapezoid quadrature.
inline double dom_inner(const Kernel& k, const StepFunction& e1, const StepFunction& e2) {
  const GridFunction a1 = adjoint_apply(k, e1);
  const GridFunction a2 = adjoint_apply(k, e2);
  return quadrature(a1.cwiseProduct(a2), k.grid);
}

/// Adjoint image computed from the measure form
/// (T*f)(s) = int_0^1 f(u) K(du, s): atoms contribute f(atom)*weight,
/// densities integrate cell-exactly against the step function.
inline GridFunction bv_adjoint_apply(const Kernel& k, const StepFunction& f) {
  if (!k.bv) {
    throw UnsupportedKernelError("bv_adjoint_apply: kernel carries no bounded-variation measure");
  }
  const StepFunction snapped = snap_to_grid(f, k.grid);
  const BvMeasure& m = *k.bv;
  const Grid& g = k.grid;
  const auto cells = snapped.cell_values(g);
  const double h = g.spacing();
  GridFunction out(g.node_count());
  for (int j = 0; j <= g.n; ++j) {
    double v = 0.0;
    if (m.atom_weight(j) != 0.0) {
      v += m.atom_weight(j) * snapped.value_rc(m.atom_location(j));
    }
    for (int i = 0; i < g.n; ++i) {
      const double d = m.density(j, i + 1);
      if (d != 0.0) v += cells[static_cast<std::size_t>(i)] * d * h;
    }
    out(j) = v;
  }
  return out;
}

/// Residual |LHS - RHS| of the duality identity
/// int_0^1 (T*f)(t) g(t) dt = int_0^1 f(t) (Tg)(dt),
/// the right side integrating f against the increments of Tg across cells.
inline double duality_residual(const Kernel& k, const StepFunction& f, const GridFunction& g) {
  if (!k.bv) {
    throw UnsupportedKernelError("duality_residual: kernel carries no bounded-variation measure");
  }
  if (g.size() != k.grid.node_count()) {
    throw std::invalid_argument("duality_residual: grid mismatch");
  }
  const StepFunction snapped = snap_to_grid(f, k.grid);
  const GridFunction adj = bv_adjoint_apply(k, snapped);
  const double lhs = quadrature(adj.cwiseProduct(g), k.grid);

  const GridFunction tg = apply_operator(k, g);
  const auto cells = snapped.cell_values(k.grid);
  double rhs = 0.0;
  for (int i = 0; i < k.grid.n; ++i) {
    rhs += cells[static_cast<std::size_t>(i)] * (tg(i + 1) - tg(i));
  }
  return std::abs(lhs - rhs);
}

/// Weighted Frobenius norm of the kernel, the discrete L2xL2 norm:
/// ||K||^2 = sum_ij w_i w_j K(t_i, s_j)^2.
inline double kernel_l2_norm(const Kernel& k) {
  double s = 0.0;
  for (int i = 0; i <= k.grid.n; ++i) {
    for (int j = 0; j <= k.grid.n; ++j) {
      s += k.grid.weights(i) * k.grid.weights(j) * k.matrix(i, j) * k.matrix(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace gfp
