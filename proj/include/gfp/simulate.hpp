#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "gfp/detail/parallel.hpp"
#include "gfp/detail/rng.hpp"
#include "gfp/fredholm.hpp"
#include "gfp/grid.hpp"
#include "gfp/kernel.hpp"

namespace gfp {

/// Row-major so each path is a contiguous row.
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EnsembleMeta {
  std::string generator;
  std::uint64_t seed = 0;
  int path_count = 0;
  int n = 0;
};

/// M sampled paths at the grid nodes; paths.row(m) is path m.
struct PathEnsemble {
  Grid grid;
  PathMatrix paths;
  EnsembleMeta meta;

  int path_count() const { return static_cast<int>(paths.rows()); }
};

namespace detail {

/// Samples X = factor * xi per path, xi ~ N(0, I), with per-path streams.
inline PathMatrix gaussian_paths_from_factor(const Eigen::MatrixXd& factor, int path_count,
                                             std::uint64_t seed) {
  const int dim = static_cast<int>(factor.cols());
  const int nodes = static_cast<int>(factor.rows());
  PathMatrix out(path_count, nodes);
  const Eigen::MatrixXd factor_t = factor.transpose();
  parallel_blocks(static_cast<std::size_t>(path_count), [&](std::size_t begin, std::size_t end) {
    PathMatrix xi(static_cast<Eigen::Index>(end - begin), dim);
    for (std::size_t m = begin; m < end; ++m) {
      auto rng = path_stream(seed, m);
      std::normal_distribution<double> normal;
      for (int j = 0; j < dim; ++j) {
        xi(static_cast<Eigen::Index>(m - begin), j) = normal(rng);
      }
    }
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin))
        .noalias() = xi * factor_t;
  });
  return out;
}

}  // namespace detail

/// Draws i.i.d. centered Gaussian paths with the given covariance via a
/// pivoted LDL^T (Cholesky-type) factor; deterministic given the seed.
/// Nodes with exactly zero variance produce exactly zero samples.
inline PathEnsemble sample_cholesky(const CovarianceMatrix& r, int path_count,
                                    std::uint64_t seed) {
  if (path_count < 1) {
    throw std::invalid_argument("sample_cholesky: need at least one path");
  }
  r.validate();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(r.matrix);
  Eigen::VectorXd d = ldlt.vectorD();
  const double d_max = std::max(d.maxCoeff(), 0.0);
  if (d.minCoeff() < -kPsdTolerance * std::max(d_max, 1e-300)) {
    throw NotPositiveSemidefiniteError(
        "sample_cholesky: covariance factorization produced pivot " +
        std::to_string(d.minCoeff()));
  }
  d = d.cwiseMax(0.0);
  Eigen::MatrixXd factor = ldlt.matrixL();
  factor = ldlt.transpositionsP().transpose() * factor;
  factor *= d.cwiseSqrt().asDiagonal();
  // a.s.-zero coordinates stay exactly zero
  for (int i = 0; i < r.matrix.rows(); ++i) {
    if (r.matrix(i, i) == 0.0) factor.row(i).setZero();
  }
  PathEnsemble ens;
  ens.grid = r.grid;
  ens.paths = detail::gaussian_paths_from_factor(factor, path_count, seed);
  ens.meta = {"cholesky", seed, path_count, r.grid.n};
  return ens;
}

/// Orthonormal basis used by the series construction: e_0 = 1,
/// e_k(t) = sqrt(2) cos(k pi t).
inline GridFunction series_basis_function(int k, const Grid& g) {
  GridFunction e(g.node_count());
  if (k == 0) {
    e.setOnes();
  } else {
    for (int i = 0; i <= g.n; ++i) {
      e(i) = std::numbers::sqrt2 * std::cos(k * std::numbers::pi * g.nodes(i));
    }
  }
  return e;
}

/// Truncated series construction of a Gaussian process from its kernel:
/// X_t = sum_{k<N} (int e_k(s) K(t,s) ds) xi_k with i.i.d. standard
/// normal xi and the cosine basis above.
inline PathEnsemble sample_series(const Kernel& k, int truncation, int path_count,
                                  std::uint64_t seed) {
  if (path_count < 1) {
    throw std::invalid_argument("sample_series: need at least one path");
  }
  if (truncation < 1 || truncation > k.grid.n) {
    throw std::invalid_argument("sample_series: truncation must be in [1, n]");
  }
  k.validate();
  Eigen::MatrixXd coeff(k.grid.node_count(), truncation);
  for (int j = 0; j < truncation; ++j) {
    coeff.col(j) = apply_operator(k, series_basis_function(j, k.grid));
  }
  PathEnsemble ens;
  ens.grid = k.grid;
  ens.paths = detail::gaussian_paths_from_factor(coeff, path_count, seed);
  ens.meta = {"series", seed, path_count, k.grid.n};
  return ens;
}

/// Compensated Poisson paths N_t - lambda t: centered, covariance
/// lambda*min(t,s), non-Gaussian. Arrivals are drawn as exponential
/// inter-arrival times truncated at 1; nodes count arrivals < t_i.
inline PathEnsemble sample_compensated_poisson(double intensity, const Grid& g, int path_count,
                                               std::uint64_t seed) {
  if (!(intensity > 0.0)) {
    throw std::invalid_argument("sample_compensated_poisson: intensity must be positive");
  }
  if (path_count < 1) {
    throw std::invalid_argument("sample_compensated_poisson: need at least one path");
  }
  PathEnsemble ens;
  ens.grid = g;
  ens.paths.resize(path_count, g.node_count());
  detail::parallel_blocks(static_cast<std::size_t>(path_count),
                          [&](std::size_t begin, std::size_t end) {
    std::vector<double> arrivals;
    for (std::size_t m = begin; m < end; ++m) {
      auto rng = detail::path_stream(seed, m);
      std::exponential_distribution<double> expo(intensity);
      arrivals.clear();
      double t = expo(rng);
      while (t < 1.0) {
        arrivals.push_back(t);
        t += expo(rng);
      }
      std::size_t count = 0;
      for (int i = 0; i <= g.n; ++i) {
        const double node = g.nodes(i);
        while (count < arrivals.size() && arrivals[count] < node) ++count;
        ens.paths(static_cast<Eigen::Index>(m), i) =
            static_cast<double>(count) - intensity * node;
      }
    }
  });
  ens.meta = {"poisson", seed, path_count, g.n};
  return ens;
}

}  // namespace gfp
