#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "nevlab/error.hpp"

namespace nevlab::quad {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct PeriodicResult {
  double value = 0.0;       ///< mean of f over [0, 2pi)
  double error = 0.0;       ///< |last two refinements|
  std::size_t nodes = 0;
};

/// Mean value (1/2pi) * integral of f over [0, 2pi) by the periodic
/// trapezoid rule with node doubling. Converged when two successive
/// doublings change the estimate by at most tol * max(1, |value|).
/// `offset` rotates the node set; callers use it to step off a singular node.
template <class F>
PeriodicResult periodic_mean(F&& f, double tol = 1e-7, std::size_t n_min = 64,
                             std::size_t n_max = std::size_t{1} << 20, double offset = 0.0) {
  std::size_t n = 8;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += f(offset + two_pi * double(k) / double(n));
  double prev = sum / double(n);
  int agreements = 0;
  while (true) {
    // new nodes at the midpoints of the current grid
    double add = 0.0;
    for (std::size_t k = 0; k < n; ++k) add += f(offset + two_pi * (double(k) + 0.5) / double(n));
    sum += add;
    n *= 2;
    const double cur = sum / double(n);
    const double err = std::abs(cur - prev);
    if (!std::isfinite(cur)) throw SingularPointError("periodic quadrature hit a non-finite node");
    if (n >= n_min) {
      agreements = err <= tol * std::max(1.0, std::abs(cur)) ? agreements + 1 : 0;
      if (agreements >= 2) return {cur, err, n};
    }
    if (n >= n_max) throw NumericalError("periodic quadrature did not converge; residual " + std::to_string(err));
    prev = cur;
  }
}

/// Mean over [0, 2pi) by adaptive 61-point Gauss-Kronrod; for piecewise
/// smooth periodic integrands. Non-finite values and an error estimate
/// above 100 * tol * max(1, |value|) are reported as errors.
template <class F>
PeriodicResult kronrod_mean(F&& f, double tol = 1e-7, unsigned max_depth = 18) {
  double err = 0.0, l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, two_pi, max_depth, tol * 1e-2,
                                                                                 &err, &l1) /
                   two_pi;
  err /= two_pi;
  if (!std::isfinite(v)) throw SingularPointError("adaptive quadrature hit a non-finite node");
  if (err > 100.0 * tol * std::max(1.0, std::abs(v)))
    throw NumericalError("adaptive quadrature did not converge; error estimate " + std::to_string(err));
  return {v, err, 0};
}

/// Gauss-Legendre rule with 16 nodes on [-1, 1].
struct GaussLegendre16 {
  std::array<double, 16> x{};
  std::array<double, 16> w{};
  GaussLegendre16() {
    using G = boost::math::quadrature::gauss<double, 16>;
    const auto& a = G::abscissa();
    const auto& b = G::weights();
    for (std::size_t i = 0; i < 8; ++i) {
      x[7 - i] = -a[i];
      w[7 - i] = b[i];
      x[8 + i] = a[i];
      w[8 + i] = b[i];
    }
  }
  static const GaussLegendre16& get() {
    static const GaussLegendre16 rule;
    return rule;
  }
};

/// Product-integration weights v_i with sum v_i p(t_i) = int_0^1 log(1/t) p(t) dt
/// exactly for polynomials p of degree < 16, at the Gauss-Legendre nodes
/// mapped to [0, 1]. Moments are taken against shifted Legendre polynomials,
/// int_0^1 log(1/t) P_k(2t-1) dt = 1 for k = 0 and (-1)^k / (k(k+1)) otherwise.
struct LogWeightRule {
  std::array<double, 16> t{};
  std::array<double, 16> v{};
  LogWeightRule() {
    const auto& gl = GaussLegendre16::get();
    Eigen::Matrix<double, 16, 16> P;
    Eigen::Matrix<double, 16, 1> mom;
    for (int i = 0; i < 16; ++i) t[i] = 0.5 * (gl.x[i] + 1.0);
    for (int i = 0; i < 16; ++i) {
      const double s = gl.x[i];
      double p0 = 1.0, p1 = s;
      P(0, i) = p0;
      P(1, i) = p1;
      for (int k = 1; k < 15; ++k) {
        const double p2 = ((2.0 * k + 1.0) * s * p1 - k * p0) / (k + 1.0);
        P(k + 1, i) = p2;
        p0 = p1;
        p1 = p2;
      }
    }
    mom(0) = 1.0;
    for (int k = 1; k < 16; ++k) mom(k) = ((k % 2) ? -1.0 : 1.0) / (double(k) * (k + 1.0));
    const Eigen::Matrix<double, 16, 1> sol = P.fullPivLu().solve(mom);
    for (int i = 0; i < 16; ++i) v[i] = sol(i);
  }
  static const LogWeightRule& get() {
    static const LogWeightRule rule;
    return rule;
  }
};

/// 16-point Gauss-Legendre on [a, b].
template <class F>
double gauss16(F&& f, double a, double b) {
  const auto& gl = GaussLegendre16::get();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 16; ++i) s += gl.w[i] * f(c + h * gl.x[i]);
  return s * h;
}

namespace detail {

// int_0^b log(R/rho) F(rho) d rho with the log weight integrated exactly.
template <class F>
double log_panel_at_origin(F&& f, double b, double R) {
  const auto& lw = LogWeightRule::get();
  const auto& gl = GaussLegendre16::get();
  const double logRb = std::log(R / b);
  double s = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double rho = b * lw.t[i];
    const double fv = f(rho);
    s += (0.5 * gl.w[i] * logRb + lw.v[i]) * fv;
  }
  return s * b;
}

template <class F>
double log_panel(F&& f, double a, double b, double R) {
  return gauss16([&](double rho) { return std::log(R / rho) * f(rho); }, a, b);
}

template <class F>
double adapt_log(F& f, double a, double b, double R, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = a == 0.0 ? log_panel_at_origin(f, m, R) : log_panel(f, a, m, R);
  const double right = log_panel(f, m, b, R);
  const double refined = left + right;
  if (std::abs(refined - whole) <= tol || depth <= 0) {
    if (depth <= 0 && std::abs(refined - whole) > 100.0 * tol)
      throw NumericalError("radial quadrature did not converge; residual " +
                           std::to_string(std::abs(refined - whole)));
    return refined;
  }
  return adapt_log(f, a, m, R, left, 0.5 * tol, depth - 1) +
         adapt_log(f, m, b, R, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// int_0^R log(R/rho) F(rho) d rho for F bounded near 0. The logarithmic
/// weight is integrated in closed form on the panel touching the origin;
/// panels are bisected until each agrees with its halves within
/// tol * max(1, |coarse estimate|).
template <class F>
double log_weighted_radial(F&& f, double R, double tol = 1e-9, int initial_panels = 4, int max_depth = 30) {
  if (!(R > 0.0)) throw RangeError("radial integral needs R > 0");
  std::vector<double> whole(initial_panels);
  double coarse = 0.0;
  for (int p = 0; p < initial_panels; ++p) {
    const double a = R * p / initial_panels, b = R * (p + 1) / initial_panels;
    whole[p] = a == 0.0 ? detail::log_panel_at_origin(f, b, R) : detail::log_panel(f, a, b, R);
    coarse += whole[p];
  }
  const double panel_tol = tol * std::max(1.0, std::abs(coarse)) / initial_panels;
  double total = 0.0;
  for (int p = 0; p < initial_panels; ++p) {
    const double a = R * p / initial_panels, b = R * (p + 1) / initial_panels;
    total += detail::adapt_log(f, a, b, R, whole[p], panel_tol, max_depth);
  }
  return total;
}

/// Adaptive 16-point Gauss-Legendre on [a, b] with panel bisection.
template <class F>
double adaptive_gauss(F&& f, double a, double b, double tol = 1e-10, int max_depth = 30) {
  std::function<double(double, double, double, double, int)> rec = [&](double lo, double hi, double whole,
                                                                        double t, int depth) -> double {
    const double m = 0.5 * (lo + hi);
    const double l = gauss16(f, lo, m), r = gauss16(f, m, hi);
    if (std::abs(l + r - whole) <= t || depth <= 0) return l + r;
    return rec(lo, m, l, 0.5 * t, depth - 1) + rec(m, hi, r, 0.5 * t, depth - 1);
  };
  return rec(a, b, gauss16(f, a, b), tol, max_depth);
}

}  // namespace nevlab::quad
