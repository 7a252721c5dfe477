#pragma once

// Effective divisors on P^n given by homogeneous polynomials with Gaussian
// rational coefficients, their Weil functions, and exact vanishing orders.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/poly.hpp"

namespace nevlab {

using Rational = boost::multiprecision::cpp_rational;

/// Element of Q(i).
struct GaussRat {
  Rational re{0}, im{0};

  GaussRat() = default;
  GaussRat(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}
  GaussRat(long long r) : re(r) {}

  bool is_zero() const { return re == 0 && im == 0; }
  cplx to_cplx() const { return {re.convert_to<double>(), im.convert_to<double>()}; }
  GaussRat conj() const { return {re, -im}; }
  Rational norm() const { return re * re + im * im; }

  friend GaussRat operator+(const GaussRat& a, const GaussRat& b) { return {a.re + b.re, a.im + b.im}; }
  friend GaussRat operator-(const GaussRat& a, const GaussRat& b) { return {a.re - b.re, a.im - b.im}; }
  friend GaussRat operator-(const GaussRat& a) { return {-a.re, -a.im}; }
  friend GaussRat operator*(const GaussRat& a, const GaussRat& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend GaussRat operator/(const GaussRat& a, const GaussRat& b) {
    if (b.is_zero()) throw NumericalError("division by zero in Q(i)");
    const Rational n = b.norm();
    const GaussRat p = a * b.conj();
    return {p.re / n, p.im / n};
  }
  GaussRat& operator+=(const GaussRat& o) { return *this = *this + o; }
  GaussRat& operator-=(const GaussRat& o) { return *this = *this - o; }
  GaussRat& operator*=(const GaussRat& o) { return *this = *this * o; }
  friend bool operator==(const GaussRat& a, const GaussRat& b) { return a.re == b.re && a.im == b.im; }

  std::string to_string() const {
    std::ostringstream os;
    if (im == 0) {
      os << re;
    } else if (re == 0) {
      os << im << "*i";
    } else {
      os << "(" << re << (im > 0 ? "+" : "-") << abs(im) << "*i)";
    }
    return os.str();
  }
};

/// Exponent vector of length n+1.
using Monomial = std::vector<int>;

/// Homogeneous polynomial in w_0..w_n over Q(i). Terms are keyed by exponent
/// vectors; std::map order is lexicographic with w_0 most significant, which
/// is the monomial order used for division.
class HomogeneousPoly {
 public:
  HomogeneousPoly() = default;
  explicit HomogeneousPoly(int n) : n_(n) {
    if (n < 1) throw ConfigError("projective dimension must be at least 1");
  }

  static HomogeneousPoly coordinate(int n, int k, GaussRat c = GaussRat(1)) {
    if (k < 0 || k > n) throw ConfigError("coordinate index out of range");
    HomogeneousPoly p(n);
    Monomial m(n + 1, 0);
    m[k] = 1;
    p.add_term(m, std::move(c));
    return p;
  }
  static HomogeneousPoly constant(int n, GaussRat c) {
    HomogeneousPoly p(n);
    p.add_term(Monomial(n + 1, 0), std::move(c));
    return p;
  }

  /// Adds c * w^m; the result must stay homogeneous.
  void add_term(const Monomial& m, GaussRat c) {
    if (static_cast<int>(m.size()) != n_ + 1) throw ConfigError("monomial has the wrong number of variables");
    const int d = std::accumulate(m.begin(), m.end(), 0);
    if (!terms_.empty() && d != degree()) throw ConfigError("polynomial is not homogeneous");
    auto& slot = terms_[m];
    slot += c;
    if (slot.is_zero()) terms_.erase(m);
  }

  int n() const noexcept { return n_; }
  int degree() const {
    if (terms_.empty()) return -1;
    const auto& m = terms_.begin()->first;
    return std::accumulate(m.begin(), m.end(), 0);
  }
  bool is_zero() const noexcept { return terms_.empty(); }
  bool is_linear() const { return degree() == 1; }
  const std::map<Monomial, GaussRat>& terms() const noexcept { return terms_; }

  /// Coefficients of a linear form, one per coordinate.
  std::vector<GaussRat> linear_coefficients() const {
    if (!is_linear()) throw ConfigError("expected a linear form");
    std::vector<GaussRat> a(n_ + 1);
    for (const auto& [m, c] : terms_)
      for (int k = 0; k <= n_; ++k)
        if (m[k] == 1) a[k] = c;
    return a;
  }

  friend HomogeneousPoly operator+(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    check_same(a, b);
    HomogeneousPoly s = a;
    for (const auto& [m, c] : b.terms_) s.add_term(m, c);
    return s;
  }
  friend HomogeneousPoly operator-(const HomogeneousPoly& a) {
    HomogeneousPoly s = a;
    for (auto& [m, c] : s.terms_) c = -c;
    return s;
  }
  friend HomogeneousPoly operator-(const HomogeneousPoly& a, const HomogeneousPoly& b) { return a + (-b); }
  friend HomogeneousPoly operator*(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    check_same(a, b);
    HomogeneousPoly s(a.n_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        Monomial m(ma.size());
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
        s.add_term(m, ca * cb);
      }
    return s;
  }
  friend HomogeneousPoly operator*(const GaussRat& c, const HomogeneousPoly& a) {
    HomogeneousPoly s(a.n_);
    if (c.is_zero()) return s;
    for (const auto& [m, x] : a.terms_) s.terms_[m] = c * x;
    return s;
  }
  friend HomogeneousPoly pow(const HomogeneousPoly& a, int k) {
    if (k < 0) throw ConfigError("negative power of a polynomial");
    HomogeneousPoly r = constant(a.n_, GaussRat(1));
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
  }
  friend bool operator==(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

  /// Leading term under the lexicographic order.
  const std::pair<const Monomial, GaussRat>& leading() const {
    if (terms_.empty()) throw ConfigError("leading term of the zero polynomial");
    return *terms_.rbegin();
  }

  /// Exact quotient a / b if b divides a, otherwise nullopt. For a single
  /// divisor, a zero remainder in multivariate division is equivalent to
  /// divisibility.
  friend std::optional<HomogeneousPoly> exact_divide(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    check_same(a, b);
    if (b.is_zero()) throw ConfigError("division by the zero polynomial");
    HomogeneousPoly q(a.n_), r = a;
    const auto& [lb, cb] = b.leading();
    while (!r.is_zero()) {
      const auto [lr, cr] = r.leading();
      Monomial m(lr.size());
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = lr[k] - lb[k];
        if (m[k] < 0) return std::nullopt;
      }
      const GaussRat c = cr / cb;
      HomogeneousPoly t(a.n_);
      t.terms_[m] = c;
      q = q.is_zero() ? t : q + t;
      r = r - t * b;
    }
    return q;
  }

  /// Floating evaluation at a point of C^{n+1}.
  cplx eval(const std::vector<cplx>& w) const {
    if (static_cast<int>(w.size()) != n_ + 1) throw ConfigError("point has the wrong number of coordinates");
    cplx s{0.0, 0.0};
    for (const auto& [m, c] : terms_) {
      cplx t = c.to_cplx();
      for (int k = 0; k <= n_; ++k)
        for (int e = 0; e < m[k]; ++e) t *= w[k];
      s += t;
    }
    return s;
  }

  /// Max-modulus and Euclidean norms of the coefficient vector.
  double coefficient_norm_max() const {
    double v = 0.0;
    for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c.to_cplx()));
    return v;
  }
  double coefficient_norm_l2() const {
    double v = 0.0;
    for (const auto& [m, c] : terms_) v += std::norm(c.to_cplx());
    return std::sqrt(v);
  }

  /// Canonical text form, highest monomial first.
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      if (!out.empty()) out += " + ";
      std::string mono;
      for (int k = 0; k <= n_; ++k) {
        if (it->first[k] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += "w" + std::to_string(k);
        if (it->first[k] > 1) mono += "^" + std::to_string(it->first[k]);
      }
      const bool unit = it->second == GaussRat(1);
      if (mono.empty())
        out += it->second.to_string();
      else
        out += unit ? mono : it->second.to_string() + "*" + mono;
    }
    return out;
  }

 private:
  static void check_same(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    if (a.n_ != b.n_) throw ConfigError("polynomials live in different projective spaces");
  }

  int n_ = 1;
  std::map<Monomial, GaussRat> terms_;
};

/// Largest m with component^m dividing section; nullopt stands for +infinity
/// (the zero section).
inline std::optional<int> ord_along(const HomogeneousPoly& section, const HomogeneousPoly& component) {
  if (section.n() != component.n()) throw ConfigError("ord_along: dimension mismatch");
  if (component.degree() < 1) throw ConfigError("ord_along: component must be non-constant");
  if (section.is_zero()) return std::nullopt;
  int m = 0;
  HomogeneousPoly r = section;
  while (r.degree() >= component.degree()) {
    auto q = exact_divide(r, component);
    if (!q) break;
    r = std::move(*q);
    ++m;
  }
  return m;
}

/// Rank of a matrix over Q(i) by Gaussian elimination.
inline int exact_rank(std::vector<std::vector<GaussRat>> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c].is_zero()) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      if (rows[r][c].is_zero()) continue;
      const GaussRat f = rows[r][c] / rows[rank][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[rank][k];
    }
    ++rank;
  }
  return rank;
}

/// True iff every subset of at most n+1 of the given linear forms is
/// linearly independent.
inline bool general_position_check(const std::vector<HomogeneousPoly>& hyperplanes, int n) {
  for (const auto& h : hyperplanes)
    if (h.n() != n || !h.is_linear()) throw ConfigError("general_position_check expects linear forms on P^n");
  const std::size_t q = hyperplanes.size();
  const std::size_t size = std::min<std::size_t>(q, n + 1);
  if (q > 24) throw ConfigError("too many hyperplanes for exhaustive subset checks");
  std::vector<std::vector<GaussRat>> coeffs;
  for (const auto& h : hyperplanes) coeffs.push_back(h.linear_coefficients());
  // subsets of the maximal size suffice: subsets of independent sets are independent
  std::vector<int> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<std::vector<GaussRat>> rows;
    for (int i : idx) rows.push_back(coeffs[i]);
    if (exact_rank(rows) != static_cast<int>(size)) return false;
    int i = static_cast<int>(size) - 1;
    while (i >= 0 && idx[i] == static_cast<int>(q - size) + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (std::size_t j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
  return true;
}

namespace detail {

/// Best rational approximation with bounded denominator, or nullopt if none
/// lies within tol.
inline std::optional<Rational> rationalize(double x, long long max_den = 100000, double tol = 1e-8) {
  if (!std::isfinite(x)) return std::nullopt;
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(v);
    if (std::abs(a) > 1e15) break;
    const long long ai = static_cast<long long>(a);
    const long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(double(h1) / double(k1) - x) <= tol * std::max(1.0, std::abs(x))) return Rational(h1, k1);
    const double frac = v - a;
    if (frac < 1e-15) break;
    v = 1.0 / frac;
  }
  if (k1 != 0 && std::abs(double(h1) / double(k1) - x) <= tol * std::max(1.0, std::abs(x))) return Rational(h1, k1);
  return std::nullopt;
}

/// Coefficients of t -> Q(p + t v) as a univariate polynomial.
inline Poly restrict_to_line(const HomogeneousPoly& Q, const std::vector<cplx>& p, const std::vector<cplx>& v) {
  const int d = Q.degree();
  // interpolate on d+1 points of the unit circle (a discrete Fourier transform)
  Poly c(d + 1, cplx{0.0, 0.0});
  for (int j = 0; j <= d; ++j) {
    const cplx t = std::polar(1.0, 2.0 * std::numbers::pi * j / (d + 1));
    std::vector<cplx> w(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) w[k] = p[k] + t * v[k];
    const cplx val = Q.eval(w);
    for (int k = 0; k <= d; ++k) c[k] += val * std::conj(std::pow(t, k)) / double(d + 1);
  }
  for (auto& x : c)
    if (std::abs(x) < 1e-13 * Q.coefficient_norm_max()) x = 0.0;
  poly::trim(c);
  return c;
}

}  // namespace detail

struct IrreducibilityResult {
  bool irreducible = true;
  std::optional<HomogeneousPoly> linear_factor;  ///< exact factor when reducible
  std::string method;
};

/// Irreducibility over Q(i) for components of degree at most 3. A reducible
/// form of degree 2 or 3 has a linear factor; candidate hyperplanes are fitted
/// through zeros of Q on random lines, rationalized, and confirmed by exact
/// division.
inline IrreducibilityResult irreducibility(const HomogeneousPoly& Q, unsigned seed = 12345) {
  const int d = Q.degree();
  const int n = Q.n();
  if (d < 1) throw ConfigError("irreducibility of a constant");
  if (d == 1) return {true, std::nullopt, "linear"};
  if (d > 3) return {true, std::nullopt, "declared (degree above 3 is trusted)"};
  // a factor that is a coordinate power is found directly
  for (int k = 0; k <= n; ++k) {
    auto w = HomogeneousPoly::coordinate(n, k);
    if (exact_divide(Q, w)) return {false, w, "coordinate factor"};
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  auto rand_vec = [&] {
    std::vector<cplx> v(n + 1);
    for (auto& x : v) x = {N01(rng), N01(rng)};
    return v;
  };
  for (int attempt = 0; attempt < 3; ++attempt) {
    // n random lines; each candidate hyperplane passes through one zero per line
    std::vector<std::vector<std::vector<cplx>>> zeros(n);
    bool ok = true;
    for (int l = 0; l < n && ok; ++l) {
      const auto p = rand_vec(), v = rand_vec();
      const Poly u = detail::restrict_to_line(Q, p, v);
      if (poly::degree(u) != d) {
        ok = false;
        break;
      }
      for (const auto& r : polynomial_roots(u)) {
        std::vector<cplx> w(n + 1);
        for (int k = 0; k <= n; ++k) w[k] = p[k] + r.z * v[k];
        zeros[l].push_back(w);
      }
    }
    if (!ok) continue;
    std::vector<std::size_t> choice(n, 0);
    while (true) {
      Eigen::MatrixXcd A(n, n + 1);
      for (int l = 0; l < n; ++l)
        for (int k = 0; k <= n; ++k) A(l, k) = zeros[l][choice[l]][k];
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
      const Eigen::MatrixXcd ker = lu.kernel();
      if (ker.cols() == 1) {
        Eigen::VectorXcd a = ker.col(0);
        Eigen::Index big = 0;
        a.cwiseAbs().maxCoeff(&big);
        a /= a(big);
        HomogeneousPoly L(n);
        bool rational = true;
        for (int k = 0; k <= n && rational; ++k) {
          const auto re = detail::rationalize(a(k).real());
          const auto im = detail::rationalize(a(k).imag());
          if (!re || !im) {
            rational = false;
            break;
          }
          Monomial m(n + 1, 0);
          m[k] = 1;
          L.add_term(m, GaussRat(*re, *im));
        }
        if (rational && !L.is_zero() && exact_divide(Q, L)) return {false, L, "linear factor"};
      }
      int l = 0;
      while (l < n && ++choice[l] == zeros[l].size()) choice[l++] = 0;
      if (l == n) break;
    }
  }
  return {true, std::nullopt, "no linear factor over Q(i)"};
}

struct DivisorComponent {
  HomogeneousPoly poly;
  int multiplicity = 1;
};

/// D = sum c_j E_j.
class DivisorSum {
 public:
  DivisorSum() = default;
  explicit DivisorSum(std::vector<DivisorComponent> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw ConfigError("divisor needs at least one component");
    const int n = comps_[0].poly.n();
    for (const auto& c : comps_) {
      if (c.poly.n() != n) throw ConfigError("divisor components live in different projective spaces");
      if (c.multiplicity < 1) throw ConfigError("divisor multiplicities must be positive");
      if (c.poly.degree() < 1) throw ConfigError("divisor components must be non-constant");
    }
    for (std::size_t i = 0; i < comps_.size(); ++i)
      for (std::size_t j = i + 1; j < comps_.size(); ++j)
        if (proportional(comps_[i].poly, comps_[j].poly))
          throw ConfigError("divisor components " + std::to_string(i) + " and " + std::to_string(j) +
                            " are proportional");
  }

  const std::vector<DivisorComponent>& components() const noexcept { return comps_; }
  int n() const { return comps_.at(0).poly.n(); }
  int total_degree() const {
    int s = 0;
    for (const auto& c : comps_) s += c.multiplicity * c.poly.degree();
    return s;
  }

  static bool proportional(const HomogeneousPoly& a, const HomogeneousPoly& b) {
    if (a.degree() != b.degree() || a.terms().size() != b.terms().size()) return false;
    const auto& [ma, ca] = a.leading();
    const auto& [mb, cb] = b.leading();
    if (ma != mb) return false;
    return (cb / ca) * a == b;
  }

 private:
  std::vector<DivisorComponent> comps_;
};

enum class WeilNorm { l2, max };

/// Weil function data for D. The point norm and the coefficient norm use the
/// same choice.
struct WeilSpec {
  DivisorSum divisor;
  WeilNorm norm = WeilNorm::l2;
};

namespace detail {
inline double log_point_norm(const std::vector<cplx>& w, WeilNorm norm) {
  double v = 0.0;
  if (norm == WeilNorm::max) {
    for (auto x : w) v = std::max(v, std::abs(x));
    return std::log(v);
  }
  for (auto x : w) v += std::norm(x);
  return 0.5 * std::log(v);
}
}  // namespace detail

/// Weil function of a single component at a point given in rescaled form;
/// +infinity when the point lies on the component.
inline double weil_component(const HomogeneousPoly& Q, WeilNorm norm, const ProjectivePoint& p) {
  const cplx q = Q.eval(p.direction);
  const double aq = std::abs(q);
  if (!(aq > 1e-300)) return std::numeric_limits<double>::infinity();
  const double cn = norm == WeilNorm::max ? Q.coefficient_norm_max() : Q.coefficient_norm_l2();
  return Q.degree() * detail::log_point_norm(p.direction, norm) + std::log(cn) - std::log(aq);
}

/// lambda_D(p) = sum_j c_j [d_j log|w| + log|Q_j| - log|Q_j(w)|].
inline double weil(const WeilSpec& spec, const ProjectivePoint& p) {
  if (static_cast<int>(p.direction.size()) != spec.divisor.n() + 1)
    throw ConfigError("point and divisor live in different projective spaces");
  double s = 0.0;
  for (const auto& c : spec.divisor.components()) s += c.multiplicity * weil_component(c.poly, spec.norm, p);
  return s;
}

/// Q(f_0, ..., f_n) as a holomorphic expression.
inline HoloExpr compose(const HomogeneousPoly& Q, const std::vector<HoloExpr>& f) {
  if (static_cast<int>(f.size()) != Q.n() + 1) throw ConfigError("curve and polynomial dimensions differ");
  HoloExpr out;
  for (const auto& [m, c] : Q.terms()) {
    HoloExpr t = HoloExpr::constant(c.to_cplx());
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k] > 0) t = t * pow(f[k], m[k]);
    out = out + t;
  }
  return out;
}

}  // namespace nevlab
