#pragma once

// Dense univariate complex polynomials and their roots.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nevlab/error.hpp"
#include "nevlab/scaled.hpp"

namespace nevlab {

/// Coefficients from the constant term upward; no trailing zeros.
using Poly = std::vector<cplx>;

namespace poly {

inline void trim(Poly& p) {
  while (!p.empty() && p.back() == cplx{0.0, 0.0}) p.pop_back();
}

inline int degree(const Poly& p) { return static_cast<int>(p.size()) - 1; }

inline cplx eval(const Poly& p, cplx z) {
  cplx acc{0.0, 0.0};
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z + *it;
  return acc;
}

inline Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(p[k] * double(k));
  trim(d);
  return d;
}

inline Poly add(const Poly& a, const Poly& b) {
  Poly s(std::max(a.size(), b.size()), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) s[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) s[i] += b[i];
  trim(s);
  return s;
}

inline Poly scale(const Poly& a, cplx c) {
  Poly s = a;
  for (auto& x : s) x *= c;
  trim(s);
  return s;
}

inline Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly s(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) s[i + j] += a[i] * b[j];
  trim(s);
  return s;
}

/// Lexicographic order used to key exponent polynomials.
inline bool less(const Poly& a, const Poly& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

}  // namespace poly

struct Root {
  cplx z;
  int multiplicity = 1;
};

/// Roots of a polynomial from the eigenvalues of its companion matrix.
/// The variable is first rescaled, z = s u with s = max |p_k/p_n|^{1/(n-k)},
/// so that the monic companion has coefficients of modulus at most 1.
/// Eigenvalues closer than 1e-5 times the largest root modulus are merged
/// into one root whose multiplicity is the cluster size; each root is then
/// polished by Newton's method on the (m-1)-th derivative, where it is
/// simple.
inline std::vector<Root> polynomial_roots(Poly p) {
  poly::trim(p);
  if (p.empty()) throw ConfigError("roots of the zero polynomial");
  const int n = poly::degree(p);
  if (n == 0) return {};
  double log_s = -std::numeric_limits<double>::infinity();
  const double log_lead = std::log(std::abs(p[n]));
  for (int k = 0; k < n; ++k)
    if (p[k] != cplx{0.0, 0.0}) log_s = std::max(log_s, (std::log(std::abs(p[k])) - log_lead) / (n - k));
  if (!std::isfinite(log_s)) {
    // p = c z^n
    return {Root{cplx{0.0, 0.0}, n}};
  }
  const double sc = std::exp(log_s);
  Poly u(n + 1);
  for (int k = 0; k <= n; ++k) {
    if (p[k] == cplx{0.0, 0.0}) continue;
    const double lm = std::log(std::abs(p[k])) - log_lead - (n - k) * log_s;
    u[k] = std::polar(std::exp(lm), std::arg(p[k]) - std::arg(p[n]));
  }
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) C(i, n - 1) = -u[i];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalue solver failed");
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);

  double scale = 0.0;
  for (auto z : ev) scale = std::max(scale, std::abs(z));
  const double merge = 1e-5 * scale;
  std::vector<Root> roots;
  std::vector<bool> used(ev.size(), false);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (used[i]) continue;
    cplx sum = ev[i];
    int m = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (!used[j] && std::abs(ev[j] - ev[i]) < merge) {
        used[j] = true;
        sum += ev[j];
        ++m;
      }
    }
    roots.push_back({sum / double(m), m});
  }
  for (auto& r : roots) {
    Poly q = u;
    for (int k = 1; k < r.multiplicity; ++k) q = poly::derivative(q);
    const Poly dq = poly::derivative(q);
    for (int it = 0; it < 50; ++it) {
      const cplx d = poly::eval(dq, r.z);
      if (d == cplx{0.0, 0.0}) break;
      const cplx step = poly::eval(q, r.z) / d;
      r.z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(r.z))) break;
    }
  }
  for (auto& r : roots) r.z *= sc;
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    return a.z.real() != b.z.real() ? a.z.real() < b.z.real() : a.z.imag() < b.z.imag();
  });
  return roots;
}

}  // namespace nevlab
