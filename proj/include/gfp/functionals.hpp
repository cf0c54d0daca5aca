#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfp/detail/parallel.hpp"
#include "gfp/expr.hpp"
#include "gfp/grid.hpp"
#include "gfp/step_function.hpp"

namespace gfp {

/// Pathwise integral of a step function against a sampled path:
/// int e dx = sum_k a_k (x(b_k) - x(b_{k-1})). Breakpoints must lie on
/// grid nodes; there is no snapping here, the increments must be exact.
inline double pathwise_integral(const StepFunction& e, const Grid& g,
                                std::span<const double> path) {
  if (path.size() != static_cast<std::size_t>(g.node_count())) {
    throw std::invalid_argument("pathwise_integral: path length does not match grid");
  }
  const auto idx = breakpoint_indices(e, g);
  const auto& vals = e.values();
  double s = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    s += vals[k] * (path[static_cast<std::size_t>(idx[k + 1])] -
                    path[static_cast<std::size_t>(idx[k])]);
  }
  return s;
}

/// Cylindrical functional f(x) = g(z_1, ..., z_n) with
/// z_k = int e_k dx for step-function integrands e_k.
struct SmoothFunctional {
  Expr g;
  std::shared_ptr<const std::vector<StepFunction>> integrands;
  std::string id;  // label carried into reports; defaults to the g string

  SmoothFunctional(Expr g_, std::vector<StepFunction> e, std::string id_ = {})
      : g(std::move(g_)),
        integrands(std::make_shared<const std::vector<StepFunction>>(std::move(e))),
        id(std::move(id_)) {
    if (integrands->empty()) {
      throw std::invalid_argument("SmoothFunctional: need at least one integrand");
    }
    if (g.variable_count() > static_cast<int>(integrands->size())) {
      throw std::invalid_argument("SmoothFunctional: g refers to more variables than integrands");
    }
    if (id.empty()) id = g.to_prefix();
  }

  int component_count() const { return static_cast<int>(integrands->size()); }
};

/// Evaluated second pathwise Malliavin derivative
/// D^2_{t,s} f(x) = sum_{k,l} c_kl e_k(t) e_l(s); coefficients are the
/// second partials of g at z(x) and are exactly symmetric.
struct SecondDerivative {
  Eigen::MatrixXd coefficients;
  std::shared_ptr<const std::vector<StepFunction>> integrands;

  double eval(double t, double s) const {
    const auto& e = *integrands;
    const int k = static_cast<int>(e.size());
    double acc = 0.0;
    for (int a = 0; a < k; ++a) {
      const double ea = e[static_cast<std::size_t>(a)].value_rc(t);
      if (ea == 0.0) continue;
      for (int b = 0; b < k; ++b) {
        acc += coefficients(a, b) * ea * e[static_cast<std::size_t>(b)].value_rc(s);
      }
    }
    return acc;
  }
};

inline std::vector<double> component_integrals(const SmoothFunctional& f, const Grid& g,
                                               std::span<const double> path) {
  std::vector<double> z;
  z.reserve(f.integrands->size());
  for (const auto& e : *f.integrands) z.push_back(pathwise_integral(e, g, path));
  return z;
}

inline double eval(const SmoothFunctional& f, const Grid& g, std::span<const double> path) {
  return f.g.eval(component_integrals(f, g, path));
}

/// First pathwise Malliavin derivative at a path:
/// D_t f(x) = sum_k (d g / d z_k)(z(x)) e_k(t), returned as a step
/// function on the union of the integrand breakpoints.
inline StepFunction malliavin_d1(const SmoothFunctional& f, const Grid& g,
                                 std::span<const double> path) {
  const auto z = component_integrals(f, g, path);
  const int k = f.component_count();
  std::vector<double> coeff(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) coeff[static_cast<std::size_t>(a)] = f.g.derivative(a).eval(z);
  return combine_steps(coeff, *f.integrands);
}

inline SecondDerivative malliavin_d2(const SmoothFunctional& f, const Grid& g,
                                     std::span<const double> path) {
  const auto z = component_integrals(f, g, path);
  const int k = f.component_count();
  SecondDerivative d2;
  d2.integrands = f.integrands;
  d2.coefficients.resize(k, k);
  for (int a = 0; a < k; ++a) {
    const Expr da = f.g.derivative(a);
    for (int b = a; b < k; ++b) {
      const double c = da.derivative(b).eval(z);
      d2.coefficients(a, b) = c;
      d2.coefficients(b, a) = c;
    }
  }
  return d2;
}

/// Image of a node function under the definite-integral operator:
/// (Iy)(t_i) = sum_{j<i} w_j y_j, the indicator-kernel operator image.
inline GridFunction integral_operator(const GridFunction& y, const Grid& g) {
  if (y.size() != g.node_count()) {
    throw std::invalid_argument("integral_operator: grid mismatch");
  }
  GridFunction out(g.node_count());
  out(0) = 0.0;
  for (int i = 1; i <= g.n; ++i) out(i) = out(i - 1) + g.weights(i - 1) * y(i - 1);
  return out;
}

/// Central finite-difference Gateaux derivative of f at x in direction Iy,
/// Richardson-extrapolated over eps in {1e-2, 5e-3, 2.5e-3}. By the
/// derivative pairing this estimates <D f(x), y> in L2.
inline double gateaux_fd(const SmoothFunctional& f, const Grid& g, std::span<const double> path,
                         const GridFunction& y) {
  const GridFunction iy = integral_operator(y, g);
  Eigen::Map<const Eigen::VectorXd> x(path.data(), static_cast<Eigen::Index>(path.size()));

  auto value_at = [&](double eps) {
    const Eigen::VectorXd xp = x + eps * iy;
    const Eigen::VectorXd xm = x - eps * iy;
    const double fp = eval(f, g, std::span<const double>(xp.data(), xp.size()));
    const double fm = eval(f, g, std::span<const double>(xm.data(), xm.size()));
    return (fp - fm) / (2.0 * eps);
  };
  const double d1 = value_at(1e-2);
  const double d2 = value_at(5e-3);
  const double d3 = value_at(2.5e-3);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d3 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

/// Probabilists' Hermite polynomial H_q(v) by the three-term recurrence
/// H_{q+1} = v H_q - q H_{q-1}, H_0 = 1, H_1 = v.
inline double hermite(int q, double v) {
  if (q < 0) throw std::invalid_argument("hermite: order must be >= 0");
  if (q == 0) return 1.0;
  double prev = 1.0;
  double cur = v;
  for (int k = 1; k < q; ++k) {
    const double next = v * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace detail {

inline double safe_zscore(double residual, double combined_stderr) {
  if (combined_stderr > 0.0) return residual / combined_stderr;
  if (residual == 0.0) return 0.0;
  return std::copysign(1e300, residual);
}

}  // namespace detail

/// Monte-Carlo estimates of both sides of the scalar Stein identity
/// E[f'(X)] = E[X f(X)] for a univariate expression f.
struct SteinReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  double residual = 0.0;
  double zscore = 0.0;
  int sample_count = 0;
};

inline SteinReport stein_residual_1d(std::span<const double> samples, const Expr& f) {
  if (samples.size() < 2) {
    throw std::invalid_argument("stein_residual_1d: need at least two samples");
  }
  if (f.variable_count() > 1) {
    throw std::invalid_argument("stein_residual_1d: expression must be univariate");
  }
  const Expr fd = f.derivative(0);
  const std::size_t m = samples.size();
  std::vector<double> lhs_vals(m);
  std::vector<double> rhs_vals(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = samples[i];
    lhs_vals[i] = fd.eval({&x, 1});
    rhs_vals[i] = x * f.eval({&x, 1});
  }
  const auto l = detail::mean_stderr(lhs_vals);
  const auto r = detail::mean_stderr(rhs_vals);
  SteinReport rep;
  rep.lhs = l.mean;
  rep.rhs = r.mean;
  rep.lhs_stderr = l.stderr_of_mean;
  rep.rhs_stderr = r.stderr_of_mean;
  rep.residual = rep.lhs - rep.rhs;
  rep.zscore = detail::safe_zscore(
      rep.residual, std::sqrt(l.stderr_of_mean * l.stderr_of_mean +
                              r.stderr_of_mean * r.stderr_of_mean));
  rep.sample_count = static_cast<int>(m);
  return rep;
}

namespace detail {

inline std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

/// f(x) = 1/2 (x(u) - x(0))^2, the quadratic that pins the covariance.
inline SmoothFunctional make_quadratic(double u) {
  return SmoothFunctional(
      Expr::product({Expr::constant(0.5), Expr::pow(Expr::variable(0), 2)}),
      {StepFunction::indicator(u)}, "half_sq@" + detail::format_param(u));
}

/// f(x) = 1/3 (x(u) - x(0))^3, sensitive to third-moment defects.
inline SmoothFunctional make_cubic(double u) {
  return SmoothFunctional(
      Expr::product({Expr::constant(1.0 / 3.0), Expr::pow(Expr::variable(0), 3)}),
      {StepFunction::indicator(u)}, "third_cube@" + detail::format_param(u));
}

namespace detail {

inline StepFunction late_increment_step() {
  // integrand of Z = x(1) - x(1/2)
  return StepFunction({0.0, 0.5, 1.0}, {0.0, 1.0});
}

}  // namespace detail

/// f(x) = cos(theta Z) with Z = x(1) - x(1/2); with its sine partner this
/// emulates the complex exponential functionals e^{i theta Z}.
inline SmoothFunctional make_trig_cos(double theta) {
  return SmoothFunctional(
      Expr::cos(Expr::product({Expr::constant(theta), Expr::variable(0)})),
      {detail::late_increment_step()}, "cos@" + detail::format_param(theta));
}

inline SmoothFunctional make_trig_sin(double theta) {
  return SmoothFunctional(
      Expr::sin(Expr::product({Expr::constant(theta), Expr::variable(0)})),
      {detail::late_increment_step()}, "sin@" + detail::format_param(theta));
}

}  // namespace gfp
