#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfp/detail/parallel.hpp"
#include "gfp/fredholm.hpp"
#include "gfp/functionals.hpp"
#include "gfp/kernel.hpp"
#include "gfp/simulate.hpp"
#include "gfp/step_function.hpp"

namespace gfp {

enum class IbpForm { StrongAtT, Weak, Bm, Martingale, BridgeOrthogonal, BridgeCanonical };

inline std::string ibp_form_name(IbpForm f) {
  switch (f) {
    case IbpForm::StrongAtT: return "strong_at_t";
    case IbpForm::Weak: return "weak";
    case IbpForm::Bm: return "bm";
    case IbpForm::Martingale: return "martingale";
    case IbpForm::BridgeOrthogonal: return "bridge_orthogonal";
    case IbpForm::BridgeCanonical: return "bridge_canonical";
  }
  throw std::invalid_argument("ibp_form_name: unknown form");
}

inline IbpForm ibp_form_from_name(const std::string& name) {
  if (name == "strong_at_t") return IbpForm::StrongAtT;
  if (name == "weak") return IbpForm::Weak;
  if (name == "bm") return IbpForm::Bm;
  if (name == "martingale") return IbpForm::Martingale;
  if (name == "bridge_orthogonal") return IbpForm::BridgeOrthogonal;
  if (name == "bridge_canonical") return IbpForm::BridgeCanonical;
  throw std::invalid_argument("unknown ibp form: " + name);
}

/// Monte-Carlo estimates of the two sides of an integration-by-parts
/// identity, with per-side standard errors. residual = lhs - rhs and
/// zscore = residual / sqrt(lhs_stderr^2 + rhs_stderr^2). Both sides are
/// estimated from the same paths (paired estimator).
struct IbpReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  double residual = 0.0;
  double zscore = 0.0;
  int sample_count = 0;
  IbpForm form = IbpForm::Weak;
  std::optional<double> t;
  std::string functional_id;

  double combined_stderr() const {
    return std::sqrt(lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr);
  }
};

struct TestVerdict {
  std::vector<IbpReport> reports;
  double alpha = 0.0;
  double max_abs_zscore = 0.0;
  bool reject = false;
};

/// Standard normal quantile by bisection on erfc (monotone, ~1e-12).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  }
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

/// Per-ensemble compilation of a functional: symbolic gradient/Hessian,
/// node samples of the integrands, and validated breakpoint indices.
struct CompiledFunctional {
  int components = 0;
  std::vector<Expr> grad;
  std::vector<std::vector<Expr>> hess;     // upper triangle evaluated, mirrored
  std::vector<std::vector<int>> bp_idx;    // node indices per integrand
  std::vector<std::vector<double>> bp_val; // values per integrand
  Eigen::MatrixXd e_nodes;                 // components x (n+1) right-continuous samples

  void components_at(std::span<const double> path, std::vector<double>& z) const {
    z.resize(static_cast<std::size_t>(components));
    for (int k = 0; k < components; ++k) {
      const auto& idx = bp_idx[static_cast<std::size_t>(k)];
      const auto& val = bp_val[static_cast<std::size_t>(k)];
      double s = 0.0;
      for (std::size_t p = 0; p < val.size(); ++p) {
        s += val[p] * (path[static_cast<std::size_t>(idx[p + 1])] -
                       path[static_cast<std::size_t>(idx[p])]);
      }
      z[static_cast<std::size_t>(k)] = s;
    }
  }

  void gradient_at(std::span<const double> z, Eigen::VectorXd& out) const {
    out.resize(components);
    for (int k = 0; k < components; ++k) out(k) = grad[static_cast<std::size_t>(k)].eval(z);
  }

  void hessian_at(std::span<const double> z, Eigen::MatrixXd& out) const {
    out.resize(components, components);
    for (int a = 0; a < components; ++a) {
      for (int b = a; b < components; ++b) {
        const double c = hess[static_cast<std::size_t>(a)][static_cast<std::size_t>(b - a)].eval(z);
        out(a, b) = c;
        out(b, a) = c;
      }
    }
  }
};

inline CompiledFunctional compile_functional(const SmoothFunctional& f, const Grid& g) {
  CompiledFunctional c;
  c.components = f.component_count();
  c.e_nodes.resize(c.components, g.node_count());
  for (int k = 0; k < c.components; ++k) {
    const auto& e = (*f.integrands)[static_cast<std::size_t>(k)];
    c.bp_idx.push_back(breakpoint_indices(e, g));
    c.bp_val.push_back(e.values());
    c.e_nodes.row(k) = e.node_samples(g).transpose();
    c.grad.push_back(f.g.derivative(k));
  }
  for (int a = 0; a < c.components; ++a) {
    std::vector<Expr> row;
    for (int b = a; b < c.components; ++b) row.push_back(c.grad[static_cast<std::size_t>(a)].derivative(b));
    c.hess.push_back(std::move(row));
  }
  return c;
}

/// Runs per-path lhs/rhs evaluation in deterministic blocks and reduces
/// the two value streams with pairwise summation.
template <typename PerPath>
IbpReport reduce_report(const PathEnsemble& ens, PerPath&& per_path) {
  const std::size_t m = static_cast<std::size_t>(ens.path_count());
  std::vector<double> lhs_vals(m);
  std::vector<double> rhs_vals(m);
  parallel_blocks(m, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z;
    Eigen::VectorXd gamma;
    Eigen::MatrixXd c;
    for (std::size_t p = begin; p < end; ++p) {
      per_path(p, z, gamma, c, lhs_vals[p], rhs_vals[p]);
    }
  });
  const auto l = mean_stderr(lhs_vals);
  const auto r = mean_stderr(rhs_vals);
  IbpReport rep;
  rep.lhs = l.mean;
  rep.rhs = r.mean;
  rep.lhs_stderr = l.stderr_of_mean;
  rep.rhs_stderr = r.stderr_of_mean;
  rep.residual = rep.lhs - rep.rhs;
  rep.zscore = safe_zscore(rep.residual, rep.combined_stderr());
  rep.sample_count = static_cast<int>(m);
  return rep;
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a.n != b.n) {
    throw std::invalid_argument(std::string(where) + ": kernel and ensemble grids differ");
  }
}

}  // namespace detail

/// Strong-form identity at a fixed time t (a grid node):
///   E[X_t D_t f(X)] = E[int_0^1 K(t,s) K*[D^2_{t,.} f(X)](s) ds].
/// Per path, with D^2 = sum c_kl e_k(t) e_l(.), the right side is
/// sum_kl c_kl e_k(t) int K(t,s) (K* e_l)(s) ds.
inline IbpReport ibp_strong(const Kernel& k, const PathEnsemble& ens, const SmoothFunctional& f,
                            double t) {
  detail::require_same_grid(k.grid, ens.grid, "ibp_strong");
  const int it = ens.grid.node_index(t);
  if (it < 0) {
    throw std::invalid_argument("ibp_strong: t = " + std::to_string(t) + " is not a grid node");
  }
  const auto cf = detail::compile_functional(f, ens.grid);
  Eigen::VectorXd a(cf.components);  // a_l = int K(t,s) (K* e_l)(s) ds
  for (int l = 0; l < cf.components; ++l) {
    const GridFunction adj = adjoint_apply(k, (*f.integrands)[static_cast<std::size_t>(l)]);
    a(l) = quadrature(k.matrix.row(it).transpose().cwiseProduct(adj), k.grid);
  }
  const Eigen::VectorXd e_at_t = cf.e_nodes.col(it);

  IbpReport rep = detail::reduce_report(
      ens, [&](std::size_t p, std::vector<double>& z, Eigen::VectorXd& gamma, Eigen::MatrixXd& c,
               double& lhs, double& rhs) {
        const auto row = ens.paths.row(static_cast<Eigen::Index>(p));
        std::span<const double> path(row.data(), static_cast<std::size_t>(row.size()));
        cf.components_at(path, z);
        cf.gradient_at(z, gamma);
        cf.hessian_at(z, c);
        lhs = path[static_cast<std::size_t>(it)] * gamma.dot(e_at_t);
        rhs = e_at_t.dot(c * a);
      });
  rep.form = IbpForm::StrongAtT;
  rep.t = ens.grid.nodes(it);
  rep.functional_id = f.id;
  return rep;
}

/// Weak-form identity (the strong form integrated over t):
///   E[int X_t D_t f dt] = E[int int K(t,s) K*[D^2_{t,.} f](s) ds dt].
inline IbpReport ibp_weak(const Kernel& k, const PathEnsemble& ens, const SmoothFunctional& f) {
  detail::require_same_grid(k.grid, ens.grid, "ibp_weak");
  const auto cf = detail::compile_functional(f, ens.grid);
  const Grid& g = ens.grid;

  // Path-independent pieces: A_l(t_i) = int K(t_i, s) (K* e_l)(s) ds and
  // Q_kl = int e_k(t) A_l(t) dt; per path only gamma and c vary.
  Eigen::MatrixXd q(cf.components, cf.components);
  {
    Eigen::MatrixXd a(g.node_count(), cf.components);
    for (int l = 0; l < cf.components; ++l) {
      a.col(l) = apply_operator(k, adjoint_apply(k, (*f.integrands)[static_cast<std::size_t>(l)]));
    }
    for (int kk = 0; kk < cf.components; ++kk) {
      for (int l = 0; l < cf.components; ++l) {
        q(kk, l) = quadrature(cf.e_nodes.row(kk).transpose().cwiseProduct(a.col(l)), g);
      }
    }
  }
  const Eigen::MatrixXd e_weighted = cf.e_nodes * g.weights.asDiagonal();

  IbpReport rep = detail::reduce_report(
      ens, [&](std::size_t p, std::vector<double>& z, Eigen::VectorXd& gamma, Eigen::MatrixXd& c,
               double& lhs, double& rhs) {
        const auto row = ens.paths.row(static_cast<Eigen::Index>(p));
        std::span<const double> path(row.data(), static_cast<std::size_t>(row.size()));
        cf.components_at(path, z);
        cf.gradient_at(z, gamma);
        cf.hessian_at(z, c);
        lhs = gamma.dot(e_weighted * row.transpose());
        rhs = (c.cwiseProduct(q)).sum();
      });
  rep.form = IbpForm::Weak;
  rep.functional_id = f.id;
  return rep;
}

namespace detail {

/// Inner time integrals of the corollary right-hand sides, one value per
/// (component l, node i); cell-exact in the step integrands.
inline Eigen::MatrixXd corollary_inner(IbpForm form, const CompiledFunctional& cf, const Grid& g,
                                       const std::vector<StepFunction>& integrands,
                                       const GridFunction* bracket_samples) {
  const int nn = g.node_count();
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(cf.components, nn);
  for (int l = 0; l < cf.components; ++l) {
    const auto cells = integrands[static_cast<std::size_t>(l)].cell_values(g);
    switch (form) {
      case IbpForm::Bm:
      case IbpForm::Martingale: {
        // int_0^{t_i} e_l d<M>_s (Lebesgue ds when the bracket is time
        // itself, so the bm form is the identity-bracket special case)
        for (int i = 1; i <= g.n; ++i) {
          const double db = bracket_samples ? (*bracket_samples)(i) - (*bracket_samples)(i - 1)
                                            : g.nodes(i) - g.nodes(i - 1);
          inner(l, i) = inner(l, i - 1) + cells[static_cast<std::size_t>(i - 1)] * db;
        }
        break;
      }
      case IbpForm::BridgeOrthogonal: {
        // int_0^1 (1_t(s) - t)(e_l(s) - int e_l) ds = E_l(t) - t int e_l
        const double mean = integrands[static_cast<std::size_t>(l)].integral();
        double cum = 0.0;
        for (int i = 1; i <= g.n; ++i) {
          cum += cells[static_cast<std::size_t>(i - 1)] * (g.nodes(i) - g.nodes(i - 1));
          inner(l, i) = cum - g.nodes(i) * mean;
        }
        break;
      }
      case IbpForm::BridgeCanonical: {
        // int_0^{t_i} [(1-s) e_l(s) - int_s^1 e_l] / (1-s)^2 ds, cell-exact:
        // on cell (s_j, s_{j+1}] the numerator is the constant
        // a_j (1 - s_{j+1}) - T_{j+1} with T the tail integral of e_l.
        std::vector<double> tail(static_cast<std::size_t>(nn), 0.0);
        for (int j = g.n - 1; j >= 0; --j) {
          tail[static_cast<std::size_t>(j)] =
              tail[static_cast<std::size_t>(j + 1)] +
              cells[static_cast<std::size_t>(j)] * (g.nodes(j + 1) - g.nodes(j));
        }
        double cum = 0.0;
        for (int i = 1; i <= g.n; ++i) {
          if (i == g.n) {
            // the final cell is never weighted (the outer factor 1-t
            // vanishes at t=1), and its integrand is singular
            inner(l, i) = 0.0;
            break;
          }
          const int j = i - 1;
          const double s_hi = g.nodes(j + 1);
          const double numerator =
              cells[static_cast<std::size_t>(j)] * (1.0 - s_hi) - tail[static_cast<std::size_t>(j + 1)];
          cum += numerator * (1.0 / (1.0 - s_hi) - 1.0 / (1.0 - g.nodes(j)));
          inner(l, i) = cum;
        }
        break;
      }
      default:
        throw std::invalid_argument("corollary_inner: not a corollary form");
    }
  }
  return inner;
}

}  // namespace detail

/// Corollary specializations of the weak identity, with the right-hand
/// side evaluated from the closed-form kernel measure rather than the
/// generic adjoint route:
///   bm:                RHS = E[int_0^1 int_0^t D^2_{t,s} f ds dt]
///   martingale:        RHS integrates D^2_{t,s} against d<M>_s over [0,t]
///   bridge_orthogonal: RHS = E[int int int (1_t(s)-t) D^2_{t,u} f (delta_s(du) - du) ds dt]
///   bridge_canonical:  RHS = E[int_0^1 int_0^t (1-t)/(1-s)^2
///                            [(1-s) D^2_{t,s} f - int_s^1 D^2_{t,u} f du] ds dt]
inline IbpReport ibp_corollary(IbpForm form, const PathEnsemble& ens, const SmoothFunctional& f,
                               const std::optional<BracketFunction>& bracket = std::nullopt) {
  if (form == IbpForm::StrongAtT || form == IbpForm::Weak) {
    throw std::invalid_argument("ibp_corollary: form must be one of the corollary forms");
  }
  if ((form == IbpForm::Martingale) != bracket.has_value()) {
    throw std::invalid_argument(
        "ibp_corollary: a bracket is required for the martingale form and only for it");
  }
  if (bracket) bracket->validate(ens.grid);
  const auto cf = detail::compile_functional(f, ens.grid);
  const Grid& g = ens.grid;

  const Eigen::MatrixXd inner = detail::corollary_inner(
      form, cf, g, *f.integrands, bracket ? &bracket->samples : nullptr);

  // q_kl = int e_k(t) [outer weight](t) inner_l(t) dt
  Eigen::MatrixXd q(cf.components, cf.components);
  for (int kk = 0; kk < cf.components; ++kk) {
    for (int l = 0; l < cf.components; ++l) {
      double s = 0.0;
      for (int i = 0; i <= g.n; ++i) {
        double w = g.weights(i) * cf.e_nodes(kk, i);
        if (form == IbpForm::BridgeCanonical) w *= (1.0 - g.nodes(i));
        s += w * inner(l, i);
      }
      q(kk, l) = s;
    }
  }
  const Eigen::MatrixXd e_weighted = cf.e_nodes * g.weights.asDiagonal();

  IbpReport rep = detail::reduce_report(
      ens, [&](std::size_t p, std::vector<double>& z, Eigen::VectorXd& gamma, Eigen::MatrixXd& c,
               double& lhs, double& rhs) {
        const auto row = ens.paths.row(static_cast<Eigen::Index>(p));
        std::span<const double> path(row.data(), static_cast<std::size_t>(row.size()));
        cf.components_at(path, z);
        cf.gradient_at(z, gamma);
        cf.hessian_at(z, c);
        lhs = gamma.dot(e_weighted * row.transpose());
        rhs = (c.cwiseProduct(q)).sum();
      });
  rep.form = form;
  rep.functional_id = f.id;
  return rep;
}

/// Empirical characteristic function of Z = int e dX against the Gaussian
/// target exp(-c theta^2 / 2) with c = wiener_variance(K, e).
struct CfPoint {
  double theta = 0.0;
  std::complex<double> empirical;
  double target = 0.0;
};

inline std::vector<CfPoint> char_function_check(const Kernel& k, const PathEnsemble& ens,
                                                const StepFunction& e,
                                                std::span<const double> thetas) {
  if (thetas.empty()) {
    throw std::invalid_argument("char_function_check: need at least one theta");
  }
  detail::require_same_grid(k.grid, ens.grid, "char_function_check");
  const double c = wiener_variance(k, e);
  const std::size_t m = static_cast<std::size_t>(ens.path_count());
  std::vector<double> z(m);
  detail::parallel_blocks(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto row = ens.paths.row(static_cast<Eigen::Index>(p));
      z[p] = pathwise_integral(e, ens.grid,
                               std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
  });
  std::vector<CfPoint> out;
  std::vector<double> re(m);
  std::vector<double> im(m);
  for (double theta : thetas) {
    for (std::size_t p = 0; p < m; ++p) {
      re[p] = std::cos(theta * z[p]);
      im[p] = std::sin(theta * z[p]);
    }
    CfPoint pt;
    pt.theta = theta;
    pt.empirical = {detail::pairwise_sum(re) / static_cast<double>(m),
                    detail::pairwise_sum(im) / static_cast<double>(m)};
    pt.target = std::exp(-0.5 * c * theta * theta);
    out.push_back(pt);
  }
  return out;
}

/// Default functional family for the Gaussianity test: quadratics pin the
/// covariance, cubics detect third-moment defects, and the trig pairs
/// emulate exponential functionals. No finite family is exhaustive; this
/// one is a pragmatic default.
inline std::vector<SmoothFunctional> default_family() {
  std::vector<SmoothFunctional> fam;
  for (double u : {0.25, 0.5, 0.75, 1.0}) fam.push_back(make_quadratic(u));
  for (double u : {0.5, 1.0}) fam.push_back(make_cubic(u));
  for (double theta : {1.0, 3.0}) {
    fam.push_back(make_trig_cos(theta));
    fam.push_back(make_trig_sin(theta));
  }
  return fam;
}

/// Runs the weak identity for every functional in the family and rejects
/// when any |zscore| exceeds the Bonferroni-corrected normal threshold.
inline TestVerdict gaussianity_test(const Kernel& k, const PathEnsemble& ens,
                                    const std::vector<SmoothFunctional>& family, double alpha) {
  if (family.empty()) {
    throw std::invalid_argument("gaussianity_test: family must be non-empty");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("gaussianity_test: alpha must be in (0,1)");
  }
  TestVerdict v;
  v.alpha = alpha;
  for (const auto& f : family) {
    v.reports.push_back(ibp_weak(k, ens, f));
    v.max_abs_zscore = std::max(v.max_abs_zscore, std::abs(v.reports.back().zscore));
  }
  const double threshold =
      normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(family.size())));
  v.reject = v.max_abs_zscore > threshold;
  return v;
}

}  // namespace gfp
