#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "gfp/errors.hpp"
#include "gfp/grid.hpp"
#include "gfp/kernel.hpp"
#include "gfp/step_function.hpp"

namespace gfp {

/// Relative tolerance for clipping small negative eigenvalues of
/// quadrature-assembled covariance matrices.
inline constexpr double kPsdTolerance = 1e-10;

/// Covariance function sampled on the grid: matrix(i,j) = R(t_i, t_j).
struct CovarianceMatrix {
  Grid grid;
  Eigen::MatrixXd matrix;

  void validate() const {
    if (matrix.rows() != grid.node_count() || matrix.cols() != grid.node_count()) {
      throw std::invalid_argument("CovarianceMatrix: dimensions do not match grid");
    }
    if (!matrix.allFinite()) {
      throw std::invalid_argument("CovarianceMatrix: non-finite entry");
    }
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > tol) {
      throw std::invalid_argument("CovarianceMatrix: not symmetric");
    }
  }
};

/// Nondecreasing bracket (quadratic variation) of a Gaussian martingale,
/// sampled at the grid nodes. Starts at 0; the terminal value must not
/// exceed 1 so the time-changed kernel stays on [0,1] (rescale time
/// upstream if it does).
struct BracketFunction {
  GridFunction samples;

  void validate(const Grid& g) const {
    if (samples.size() != g.node_count()) {
      throw std::invalid_argument("BracketFunction: sample count does not match grid");
    }
    if (samples(0) != 0.0) {
      throw std::invalid_argument("BracketFunction: bracket must start at 0");
    }
    for (int i = 0; i < g.n; ++i) {
      if (samples(i + 1) < samples(i)) {
        throw std::invalid_argument("BracketFunction: bracket must be nondecreasing");
      }
    }
    if (samples(g.n) > 1.0) {
      throw std::invalid_argument("BracketFunction: terminal bracket exceeds 1; rescale time");
    }
  }

  /// Generalized inverse at level s by linear interpolation within the
  /// first grid cell where the bracket strictly crosses s. When s equals
  /// the value of a flat stretch, this lands on the cell boundary ending
  /// the flat, which is where the time-changed kernel actually jumps.
  double inverse(const Grid& g, double s) const {
    for (int i = 0; i < g.n; ++i) {
      if (samples(i + 1) > s) {
        const double lo = samples(i);
        if (s <= lo) return g.nodes(i);
        return g.nodes(i) + g.spacing() * (s - lo) / (samples(i + 1) - lo);
      }
    }
    return g.nodes(g.n);
  }
};

/// Integral of the covariance diagonal (finite iff the covariance
/// operator is trace-class); reported for diagnostics.
inline double trace_check(const CovarianceMatrix& r) {
  r.validate();
  return quadrature(r.matrix.diagonal(), r.grid);
}

/// Covariance induced by a square-integrable kernel:
/// R(t_i, t_j) = sum_m w_m K(t_i, s_m) K(t_j, s_m). Exactly symmetric.
inline CovarianceMatrix covariance_from_kernel(const Kernel& k) {
  k.validate();
  const Eigen::MatrixXd half = k.matrix * k.grid.weights.cwiseSqrt().asDiagonal();
  const int nn = k.grid.node_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(nn, nn);
  r.selfadjointView<Eigen::Lower>().rankUpdate(half);
  r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
  return CovarianceMatrix{k.grid, std::move(r)};
}

/// Square-root factorization of a covariance matrix.
///
/// The continuum identity R = K K* with a ds-integral becomes, on the
/// grid, R = K_mat diag(w) K_mat^T. The symmetric PSD square root S of R
/// (by eigendecomposition, negative eigenvalues within tolerance clipped
/// to zero) is therefore rescaled to K_mat = S diag(w)^{-1/2}, which keeps
/// covariance_from_kernel(factorize(R)) == R to round-off.
inline Kernel factorize(const CovarianceMatrix& r) {
  r.validate();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.matrix);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("factorize: eigendecomposition failed");
  }
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lambda_max = ev.maxCoeff();
  if (ev.minCoeff() < -kPsdTolerance * std::max(lambda_max, 0.0)) {
    throw NotPositiveSemidefiniteError(
        "factorize: eigenvalue " + std::to_string(ev.minCoeff()) +
        " below PSD tolerance (largest is " + std::to_string(lambda_max) + ")");
  }
  const Eigen::VectorXd sqrt_ev = ev.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd s =
      es.eigenvectors() * sqrt_ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd k = s * r.grid.weights.cwiseSqrt().cwiseInverse().asDiagonal();
  return Kernel{r.grid, std::move(k), std::nullopt, std::nullopt};
}

namespace detail {

inline BvMeasure make_bv_measure(const Grid& g) {
  BvMeasure m;
  m.atom_location = Eigen::VectorXd::Zero(g.node_count());
  m.atom_weight = Eigen::VectorXd::Zero(g.node_count());
  m.density = Eigen::MatrixXd::Zero(g.node_count(), g.node_count());
  return m;
}

}  // namespace detail

/// Closed-form kernel catalog. Indicators use the K(t,s) = 1{s < t}
/// convention, so diagonal entries of indicator-type kernels are 0 and
/// every catalog kernel has K(0,.) = 0.
///
///   bm                 K(t,s) = 1{s<t}
///   bridge_orthogonal  K(t,s) = 1{s<t} - t
///   bridge_canonical   K(t,s) = (1-t)/(1-s) 1{s<t}
///   martingale         K(t,s) = 1{s < <M>_t} for the supplied bracket
///
/// Each kernel carries its first-argument variation as a BvMeasure. Rows
/// whose kernel section vanishes identically (s = 1 for the indicator
/// kernels, s >= <M>_1 for the martingale) get the zero measure.
inline Kernel catalog_kernel(CatalogKernel name, const Grid& g,
                             const std::optional<BracketFunction>& bracket = std::nullopt) {
  if ((name == CatalogKernel::Martingale) != bracket.has_value()) {
    throw std::invalid_argument(
        "catalog_kernel: a bracket is required for martingale kernels and only for them");
  }
  const int nn = g.node_count();
  Kernel k;
  k.grid = g;
  k.matrix = Eigen::MatrixXd::Zero(nn, nn);
  k.closed_form = name;
  BvMeasure m = detail::make_bv_measure(g);

  switch (name) {
    case CatalogKernel::BrownianMotion: {
      for (int i = 0; i <= g.n; ++i) {
        for (int j = 0; j < i; ++j) k.matrix(i, j) = 1.0;
      }
      for (int j = 0; j < g.n; ++j) {
        m.atom_location(j) = g.nodes(j);
        m.atom_weight(j) = 1.0;
      }
      break;
    }
    case CatalogKernel::BridgeOrthogonal: {
      for (int i = 0; i <= g.n; ++i) {
        const double t = g.nodes(i);
        for (int j = 0; j <= g.n; ++j) {
          k.matrix(i, j) = (j < i ? 1.0 : 0.0) - t;
        }
      }
      for (int j = 0; j <= g.n; ++j) {
        if (j < g.n) {
          m.atom_location(j) = g.nodes(j);
          m.atom_weight(j) = 1.0;
        }
        m.density.row(j).setConstant(-1.0);
      }
      break;
    }
    case CatalogKernel::BridgeCanonical: {
      for (int i = 0; i <= g.n; ++i) {
        const double t = g.nodes(i);
        for (int j = 0; j < i; ++j) {
          k.matrix(i, j) = (1.0 - t) / (1.0 - g.nodes(j));
        }
      }
      for (int j = 0; j < g.n; ++j) {
        const double s = g.nodes(j);
        m.atom_location(j) = s;
        m.atom_weight(j) = 1.0;
        for (int i = 0; i <= g.n; ++i) {
          if (g.nodes(i) > s) m.density(j, i) = -1.0 / (1.0 - s);
        }
      }
      break;
    }
    case CatalogKernel::Martingale: {
      bracket->validate(g);
      const GridFunction& br = bracket->samples;
      for (int i = 0; i <= g.n; ++i) {
        for (int j = 0; j <= g.n; ++j) {
          if (g.nodes(j) < br(i)) k.matrix(i, j) = 1.0;
        }
      }
      for (int j = 0; j <= g.n; ++j) {
        const double s = g.nodes(j);
        if (s < br(g.n)) {
          m.atom_location(j) = bracket->inverse(g, s);
          m.atom_weight(j) = 1.0;
        }
      }
      break;
    }
  }
  k.bv = std::move(m);
  return k;
}

/// Closed-form covariances matching the kernel catalog:
/// bm -> min(t,s); both bridge representations -> min(t,s) - ts;
/// martingale -> <M>_{min(t,s)}.
inline CovarianceMatrix catalog_covariance(
    CatalogKernel name, const Grid& g,
    const std::optional<BracketFunction>& bracket = std::nullopt) {
  if ((name == CatalogKernel::Martingale) != bracket.has_value()) {
    throw std::invalid_argument(
        "catalog_covariance: a bracket is required for martingale covariances and only for them");
  }
  const int nn = g.node_count();
  Eigen::MatrixXd r(nn, nn);
  for (int i = 0; i <= g.n; ++i) {
    for (int j = 0; j <= g.n; ++j) {
      const double t = g.nodes(i);
      const double s = g.nodes(j);
      switch (name) {
        case CatalogKernel::BrownianMotion:
          r(i, j) = std::min(t, s);
          break;
        case CatalogKernel::BridgeOrthogonal:
        case CatalogKernel::BridgeCanonical:
          r(i, j) = std::min(t, s) - t * s;
          break;
        case CatalogKernel::Martingale:
          r(i, j) = bracket->samples(std::min(i, j));
          break;
      }
    }
  }
  if (name == CatalogKernel::Martingale) bracket->validate(g);
  return CovarianceMatrix{g, std::move(r)};
}

/// Variance of the Wiener integral of a step function against the process
/// with this Fredholm kernel: Var(int e dX) = ||K* e||^2 in L2.
inline double wiener_variance(const Kernel& k, const StepFunction& e) {
  return dom_inner(k, e, e);
}

}  // namespace gfp
