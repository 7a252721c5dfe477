#pragma once

// Holomorphic expressions in one variable z, closed under +, *, integer
// powers, d/dz and exp of a polynomial. Every such expression has a unique
// normal form
//
//     sum_j p_j(z) * exp(q_j(z)),   q_j(0) = 0, q_j pairwise distinct,
//
// which is what HoloExpr stores. Distinct exponentials with polynomial
// coefficients are linearly independent, so an expression is identically
// zero iff every p_j vanishes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nevlab/error.hpp"
#include "nevlab/poly.hpp"
#include "nevlab/scaled.hpp"

namespace nevlab {

class HoloExpr {
 public:
  struct Term {
    Poly exponent;  ///< q with q(0) = 0; empty for a pure polynomial term
    Poly coeff;     ///< p, never empty
  };

  struct Evaluation {
    ScaledComplex value;
    double max_term_log = -std::numeric_limits<double>::infinity();  ///< log of the largest monomial

    /// True when the value is zero up to cancellation among monomials.
    bool vanishes(double rel = 1e-14) const {
      return value.is_zero() || value.log_abs() - max_term_log < std::log(rel);
    }
  };

  HoloExpr() = default;

  static HoloExpr constant(cplx c) { return polynomial(Poly{c}); }
  static HoloExpr z() { return polynomial(Poly{0.0, 1.0}); }
  static HoloExpr polynomial(Poly p) {
    poly::trim(p);
    HoloExpr e;
    if (!p.empty()) e.terms_.push_back({Poly{}, std::move(p)});
    return e;
  }

  /// exp(arg) for a polynomial argument.
  static HoloExpr exp(const HoloExpr& arg) {
    if (!arg.is_polynomial()) throw ConfigError("exp() is only supported for polynomial arguments");
    Poly q = arg.as_polynomial();
    const cplx q0 = q.empty() ? cplx{0.0, 0.0} : q[0];
    if (!q.empty()) q[0] = 0.0;
    poly::trim(q);
    HoloExpr e;
    e.terms_.push_back({std::move(q), Poly{std::exp(q0)}});
    return e;
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  bool is_polynomial() const noexcept { return terms_.empty() || (terms_.size() == 1 && terms_[0].exponent.empty()); }
  bool is_constant() const noexcept { return is_polynomial() && (terms_.empty() || terms_[0].coeff.size() == 1); }

  Poly as_polynomial() const {
    if (!is_polynomial()) throw ConfigError("expression is not a polynomial");
    return terms_.empty() ? Poly{} : terms_[0].coeff;
  }

  friend HoloExpr operator+(const HoloExpr& a, const HoloExpr& b) {
    HoloExpr out;
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && poly::less(a.terms_[i].exponent, b.terms_[j].exponent))) {
        out.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || poly::less(b.terms_[j].exponent, a.terms_[i].exponent)) {
        out.terms_.push_back(b.terms_[j++]);
      } else {
        Poly c = poly::add(a.terms_[i].coeff, b.terms_[j].coeff);
        if (!c.empty()) out.terms_.push_back({a.terms_[i].exponent, std::move(c)});
        ++i;
        ++j;
      }
    }
    return out;
  }

  friend HoloExpr operator-(const HoloExpr& a) { return a * constant(-1.0); }
  friend HoloExpr operator-(const HoloExpr& a, const HoloExpr& b) { return a + (-b); }

  friend HoloExpr operator*(const HoloExpr& a, const HoloExpr& b) {
    HoloExpr out;
    for (const auto& s : a.terms_) {
      for (const auto& t : b.terms_) {
        HoloExpr piece;
        Poly c = poly::mul(s.coeff, t.coeff);
        if (c.empty()) continue;
        piece.terms_.push_back({poly::add(s.exponent, t.exponent), std::move(c)});
        out = out + piece;
      }
    }
    return out;
  }

  HoloExpr& operator+=(const HoloExpr& o) { return *this = *this + o; }
  HoloExpr& operator*=(const HoloExpr& o) { return *this = *this * o; }

  friend HoloExpr pow(const HoloExpr& a, int k) {
    if (k < 0) throw ConfigError("negative powers are not holomorphic");
    HoloExpr out = constant(1.0), base = a;
    while (k > 0) {
      if (k & 1) out *= base;
      base *= base;
      k >>= 1;
    }
    return out;
  }

  /// d/dz, using (p e^q)' = (p' + p q') e^q.
  HoloExpr derivative() const {
    HoloExpr out;
    for (const auto& t : terms_) {
      Poly c = poly::add(poly::derivative(t.coeff), poly::mul(t.coeff, poly::derivative(t.exponent)));
      if (c.empty()) continue;
      HoloExpr piece;
      piece.terms_.push_back({t.exponent, std::move(c)});
      out = out + piece;
    }
    return out;
  }

  Evaluation evaluate(cplx z) const {
    Evaluation ev;
    const double az = std::abs(z);
    for (const auto& t : terms_) {
      const cplx q = poly::eval(t.exponent, z);
      const ScaledComplex e = ScaledComplex::exp(q);
      ev.value += ScaledComplex(poly::eval(t.coeff, z)) * e;
      double top = 0.0, zk = 1.0;
      for (std::size_t k = 0; k < t.coeff.size(); ++k, zk *= az) top = std::max(top, std::abs(t.coeff[k]) * zk);
      double mono;
      if (std::isfinite(top) && top > 0.0) {
        mono = std::log(top);
      } else {
        mono = -std::numeric_limits<double>::infinity();
        const double logz = std::log(az);
        for (std::size_t k = 0; k < t.coeff.size(); ++k)
          if (t.coeff[k] != cplx{0.0, 0.0})
            mono = std::max(mono, std::log(std::abs(t.coeff[k])) + (k == 0 ? 0.0 : double(k) * logz));
      }
      ev.max_term_log = std::max(ev.max_term_log, mono + q.real());
    }
    return ev;
  }

  ScaledComplex operator()(cplx z) const { return evaluate(z).value; }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os << std::setprecision(17);
    auto poly_str = [&](const Poly& p) {
      std::ostringstream ps;
      ps << std::setprecision(17);
      bool first = true;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] == cplx{0.0, 0.0}) continue;
        if (!first) ps << " + ";
        first = false;
        if (p[k].imag() == 0.0)
          ps << p[k].real();
        else
          ps << "(" << p[k].real() << (p[k].imag() < 0 ? "" : "+") << p[k].imag() << "*i)";
        if (k >= 1) ps << "*z";
        if (k >= 2) ps << "^" << k;
      }
      return ps.str();
    };
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i) os << " + ";
      os << "(" << poly_str(terms_[i].coeff) << ")";
      if (!terms_[i].exponent.empty()) os << "*exp(" << poly_str(terms_[i].exponent) << ")";
    }
    return os.str();
  }

 private:
  std::vector<Term> terms_;
};

/// psi = numerator / denominator.
struct MeromorphicFn {
  HoloExpr numerator;
  HoloExpr denominator = HoloExpr::constant(1.0);

  MeromorphicFn() = default;
  explicit MeromorphicFn(HoloExpr num, HoloExpr den = HoloExpr::constant(1.0))
      : numerator(std::move(num)), denominator(std::move(den)) {
    if (denominator.is_zero()) throw ConfigError("meromorphic function with zero denominator");
  }

  bool is_constant() const {
    // psi' = (N'D - ND') / D^2
    return (numerator.derivative() * denominator - numerator * denominator.derivative()).is_zero();
  }
  bool is_entire() const { return denominator.is_constant(); }
};

/// Vector field a(z) d/dz; construction fails unless a has no zeros in the
/// working domain |z| < domain_radius.
class VectorField {
 public:
  explicit VectorField(HoloExpr a = HoloExpr::constant(1.0),
                       double domain_radius = std::numeric_limits<double>::infinity())
      : a_(std::move(a)), domain_radius_(domain_radius) {
    if (a_.is_zero()) throw ConfigError("vector field coefficient is identically zero");
    if (a_.terms().size() != 1)
      throw ConfigError("cannot certify that the vector field coefficient is nowhere zero");
    const Poly& p = a_.terms()[0].coeff;
    if (poly::degree(p) >= 1) {
      if (std::isinf(domain_radius_)) throw ConfigError("vector field coefficient vanishes somewhere in the plane");
      for (const auto& r : polynomial_roots(p))
        if (std::abs(r.z) < domain_radius_)
          throw ConfigError("vector field coefficient vanishes inside the working domain");
    }
  }

  const HoloExpr& coefficient() const noexcept { return a_; }
  HoloExpr apply(const HoloExpr& f) const { return a_ * f.derivative(); }

 private:
  HoloExpr a_;
  double domain_radius_;
};

/// k-fold application of the vector field.
inline HoloExpr xderive(const HoloExpr& expr, const VectorField& field, int k) {
  if (k < 0) throw ConfigError("derivative order must be non-negative");
  HoloExpr out = expr;
  for (int i = 0; i < k; ++i) out = field.apply(out);
  return out;
}

/// X^k(psi) as numerator / denominator^(k+1).
inline MeromorphicFn xderive(const MeromorphicFn& psi, const VectorField& field, int k) {
  if (k < 0) throw ConfigError("derivative order must be non-negative");
  HoloExpr num = psi.numerator;
  const HoloExpr& D = psi.denominator;
  const HoloExpr XD = field.apply(D);
  int m = 1;  // psi = num / D^m at step 0 when written with m = 1
  for (int i = 0; i < k; ++i) {
    // X(P / D^m) = (X(P) D - m P X(D)) / D^{m+1}
    num = field.apply(num) * D - HoloExpr::constant(double(m)) * num * XD;
    ++m;
  }
  return MeromorphicFn(num, pow(D, m));
}

// ---------------------------------------------------------------------------
// Wronskians

namespace detail {

inline std::vector<std::vector<HoloExpr>> derivative_rows(const std::vector<HoloExpr>& f, const VectorField& field) {
  const std::size_t n = f.size();
  std::vector<std::vector<HoloExpr>> rows(n, std::vector<HoloExpr>(n));
  for (std::size_t k = 0; k < n; ++k) {
    HoloExpr cur = f[k];
    for (std::size_t j = 0; j < n; ++j) {
      rows[j][k] = cur;
      if (j + 1 < n) cur = field.apply(cur);
    }
  }
  return rows;
}

}  // namespace detail

/// Symbolic determinant with rows f, X(f), ..., X^n(f), expanded by minors
/// over column subsets.
inline HoloExpr wronskian(const std::vector<HoloExpr>& f, const VectorField& field) {
  const std::size_t n = f.size();
  if (n == 0 || n > 16) throw ConfigError("wronskian needs between 1 and 16 components");
  const auto rows = detail::derivative_rows(f, field);
  // minor[mask] = determinant of rows (n - |mask|) .. n-1 restricted to columns in mask
  std::vector<HoloExpr> minor(std::size_t{1} << n);
  std::vector<bool> have(minor.size(), false);
  minor[0] = HoloExpr::constant(1.0);
  have[0] = true;
  for (std::size_t mask = 1; mask < minor.size(); ++mask) {
    const int size = __builtin_popcountll(mask);
    const std::size_t row = n - size;
    HoloExpr acc;
    int sign_pos = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!(mask >> c & 1)) continue;
      const HoloExpr term = rows[row][c] * minor[mask & ~(std::size_t{1} << c)];
      acc = (sign_pos % 2 == 0) ? acc + term : acc - term;
      ++sign_pos;
    }
    minor[mask] = acc;
  }
  return minor.back();
}

/// Numerical Wronskian at z, returned in scaled form.
inline ScaledComplex wronskian_value(const std::vector<HoloExpr>& f, const VectorField& field, cplx z) {
  const auto rows = detail::derivative_rows(f, field);
  const std::size_t n = f.size();
  Eigen::MatrixXcd M(n, n);
  double total_shift = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<ScaledComplex> col(n);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n; ++r) {
      col[r] = rows[r][c](z);
      if (!col[r].is_zero()) shift = std::max(shift, col[r].log_abs());
    }
    if (!std::isfinite(shift)) return {};
    for (std::size_t r = 0; r < n; ++r) M(r, c) = col[r].rescaled(shift);
    total_shift += shift;
  }
  return ScaledComplex(Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant(), total_shift);
}

/// Determinant with entries X^j(f_k)/f_k evaluated at z.
inline cplx log_wronskian_eval(const std::vector<HoloExpr>& f, const VectorField& field, cplx z) {
  const auto rows = detail::derivative_rows(f, field);
  const std::size_t n = f.size();
  Eigen::MatrixXcd M(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto base = f[c].evaluate(z);
    if (base.vanishes()) throw SingularPointError("log-Wronskian entry has a vanishing denominator");
    for (std::size_t r = 0; r < n; ++r) M(r, c) = ratio(rows[r][c](z), base.value);
  }
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
}

/// Rank decision for linear independence over C: coefficients of each
/// component in the basis {z^a exp(q)} form a matrix whose numerical rank
/// (relative threshold 1e-10) is computed by full-pivot LU.
inline bool linearly_independent(const std::vector<HoloExpr>& f) {
  std::vector<std::pair<Poly, std::size_t>> basis;  // (exponent, degree)
  auto index_of = [&](const Poly& q, std::size_t deg) {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (!poly::less(basis[i].first, q) && !poly::less(q, basis[i].first) && basis[i].second == deg) return i;
    basis.push_back({q, deg});
    return basis.size() - 1;
  };
  std::vector<std::vector<std::pair<std::size_t, cplx>>> entries(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    for (const auto& t : f[k].terms())
      for (std::size_t d = 0; d < t.coeff.size(); ++d)
        if (t.coeff[d] != cplx{0.0, 0.0}) entries[k].push_back({index_of(t.exponent, d), t.coeff[d]});
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(basis.size(), f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    for (auto [i, c] : entries[k]) M(i, k) = c;
  if (basis.empty()) return false;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  lu.setThreshold(1e-10);
  return static_cast<std::size_t>(lu.rank()) == f.size();
}

// ---------------------------------------------------------------------------
// Projective curves

struct ProjectivePoint {
  double log_scale = 0.0;          ///< log of the largest |f_i|
  std::vector<cplx> direction;     ///< f_i * exp(-log_scale); max modulus 1
};

class ProjectiveCurve {
 public:
  ProjectiveCurve() = default;
  explicit ProjectiveCurve(std::vector<HoloExpr> components) : f_(std::move(components)) {
    if (f_.size() < 2) throw ConfigError("a projective curve needs at least two components");
    if (std::all_of(f_.begin(), f_.end(), [](const HoloExpr& e) { return e.is_zero(); }))
      throw ConfigError("all components are identically zero");
    for (const auto& c : f_) df_.push_back(c.derivative());
  }

  const std::vector<HoloExpr>& components() const noexcept { return f_; }
  const std::vector<HoloExpr>& derivatives() const noexcept { return df_; }
  std::size_t dimension() const noexcept { return f_.size() - 1; }

  bool is_constant() const {
    // constant iff every 2x2 minor f_i f_j' - f_j f_i' vanishes
    for (std::size_t i = 0; i < f_.size(); ++i)
      for (std::size_t j = i + 1; j < f_.size(); ++j)
        if (!(f_[i] * df_[j] - f_[j] * df_[i]).is_zero()) return false;
    return true;
  }

 private:
  std::vector<HoloExpr> f_, df_;
};

inline ProjectivePoint eval_projective(const ProjectiveCurve& curve, cplx z) {
  const auto& f = curve.components();
  std::vector<HoloExpr::Evaluation> ev;
  ev.reserve(f.size());
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& c : f) {
    ev.push_back(c.evaluate(z));
    if (!ev.back().vanishes()) {
      any = true;
      top = std::max(top, ev.back().value.log_abs());
    }
  }
  if (!any) throw NonReducedError("all homogeneous coordinates vanish");
  ProjectivePoint p;
  p.log_scale = top;
  for (const auto& e : ev) p.direction.push_back(e.vanishes() ? cplx{0.0, 0.0} : e.value.rescaled(top));
  return p;
}

/// Pull-back of the Fubini-Study form per unit Euclidean area,
///     (1/pi) sum_{i<j} |f_i f_j' - f_j f_i'|^2 / ||f||^4,
/// normalized so that a line has total mass 1.
inline double fs_density(const ProjectiveCurve& curve, cplx z) {
  const auto& f = curve.components();
  const auto& df = curve.derivatives();
  std::vector<ScaledComplex> v(f.size()), dv(f.size());
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto e = f[i].evaluate(z);
    v[i] = e.vanishes() ? ScaledComplex{} : e.value;
    dv[i] = df[i](z);
    if (!v[i].is_zero()) {
      any = true;
      top = std::max(top, v[i].log_abs());
    }
  }
  if (!any) throw NonReducedError("fs_density at a non-reduced point");
  double norm2 = 0.0, num = 0.0;
  std::vector<cplx> u(f.size()), du(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    u[i] = v[i].rescaled(top);
    du[i] = dv[i].rescaled(top);
    norm2 += std::norm(u[i]);
  }
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) num += std::norm(u[i] * du[j] - u[j] * du[i]);
  return num / (std::numbers::pi * norm2 * norm2);
}

/// log ||f(z)|| with the Euclidean norm.
inline double log_norm(const ProjectiveCurve& curve, cplx z) {
  const auto p = eval_projective(curve, z);
  double s = 0.0;
  for (auto c : p.direction) s += std::norm(c);
  return p.log_scale + 0.5 * std::log(s);
}

}  // namespace nevlab
