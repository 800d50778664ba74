#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "tview/errors.hpp"

namespace tview {

// Shifted ELU used for the Cholesky diagonal: elu(x) + 1, strictly positive.
inline double elu1(double x) { return x >= 0.0 ? x + 1.0 : std::exp(x); }

inline double elu1_deriv(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

// Inverse of elu1 on (0, inf).
inline double elu1_inv(double y) { return y >= 1.0 ? y - 1.0 : std::log(y); }

namespace detail {

// Adaptive Simpson quadrature (standard recursive bisection on the error
// estimate; eps is an absolute tolerance on the integral).
inline double simpson_slice(const std::function<double(double)>& f, double a,
                            double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double eps,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_slice(f, a, m, fa, flm, fm);
  const double right = simpson_slice(f, m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson_slice(f, a, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, eps, 60);
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b), integrated numerically after the
// substitution t = sin^2(theta), which removes the endpoint singularities for
// a, b >= 1/2 (the only regime we use: a = d/2, b = nu/2).
inline double reg_inc_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    // 2 sin^{2a-1} cos^{2b-1}
    return 2.0 * std::pow(s, 2.0 * a - 1.0) * std::pow(c, 2.0 * b - 1.0);
  };
  const double upper = std::asin(std::sqrt(x));
  const double integral = detail::adaptive_simpson(integrand, 0.0, upper, 1e-14);
  return integral / std::exp(log_beta);
}

// CDF of the F distribution with d numerator and nu denominator dof.
inline double f_cdf(double f, double d, double nu) {
  if (f <= 0.0) return 0.0;
  return reg_inc_beta(d * f / (d * f + nu), 0.5 * d, 0.5 * nu);
}

// Quantile of the F distribution by bisection on the numerically integrated
// CDF; interval narrowed to 1e-10 (relative to the bracket magnitude).
inline double f_quantile(double level, double d, double nu) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error("f_quantile: level must lie in (0,1)");
  }
  double lo = 0.0, hi = 1.0;
  while (f_cdf(hi, d, nu) < level) {
    hi *= 2.0;
    if (hi > 1e300) throw Error("f_quantile: bracket failure");
  }
  while (hi - lo > 1e-10 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, d, nu) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace tview
