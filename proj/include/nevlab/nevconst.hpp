#pragma once

// Upper bounds for the Nevanlinna constant Nev(O(d_L), D) on P^n by exact
// verification of candidate triples (k, V, mu), the stratification of D by
// common zero loci, and the full second-main-theorem harness
// m_f(r, D) <= bound * T_{f,L}(r) + error.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nevlab/divisor.hpp"
#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/nevanlinna.hpp"
#include "nevlab/parallel.hpp"
#include "nevlab/smt.hpp"
#include "nevlab/surface.hpp"

namespace nevlab {

/// Sorted component indices.
using StratumKey = std::vector<int>;

struct Stratum {
  StratumKey components;
  std::vector<int> through;          ///< components vanishing on the whole common zero locus
  std::vector<GaussRat> witness;     ///< exact point of the locus, when one is computed
  std::string method;
};

struct Stratification {
  int n = 0;
  std::vector<Stratum> strata;  ///< includes the empty subset (the locus is all of P^n)

  const Stratum* find(const StratumKey& key) const {
    for (const auto& s : strata)
      if (s.components == key) return &s;
    return nullptr;
  }
};

namespace detail {

using GaussMatrix = std::vector<std::vector<GaussRat>>;

/// One nonzero vector of the right kernel of A, or nullopt if the kernel is
/// trivial. Exact reduced row echelon form.
inline std::optional<std::vector<GaussRat>> exact_kernel_vector(GaussMatrix A, std::size_t cols) {
  std::vector<int> pivot_col;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < A.size(); ++c) {
    std::size_t piv = row;
    while (piv < A.size() && A[piv][c].is_zero()) ++piv;
    if (piv == A.size()) continue;
    std::swap(A[piv], A[row]);
    const GaussRat inv = GaussRat(1) / A[row][c];
    for (auto& x : A[row]) x *= inv;
    for (std::size_t r = 0; r < A.size(); ++r) {
      if (r == row || A[r][c].is_zero()) continue;
      const GaussRat f = A[r][c];
      for (std::size_t k = 0; k < cols; ++k) A[r][k] -= f * A[row][k];
    }
    pivot_col.push_back(static_cast<int>(c));
    ++row;
  }
  if (pivot_col.size() == cols) return std::nullopt;
  std::size_t free = 0;
  while (std::find(pivot_col.begin(), pivot_col.end(), static_cast<int>(free)) != pivot_col.end()) ++free;
  std::vector<GaussRat> v(cols);
  v[free] = GaussRat(1);
  for (std::size_t i = 0; i < pivot_col.size(); ++i) v[pivot_col[i]] = -A[i][free];
  return v;
}

using UPoly = std::vector<GaussRat>;  // ascending coefficients

inline void utrim(UPoly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

inline UPoly urem(UPoly a, const UPoly& b) {
  utrim(a);
  while (a.size() >= b.size() && !a.empty()) {
    const GaussRat f = a.back() / b.back();
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    utrim(a);
  }
  return a;
}

inline UPoly ugcd(UPoly a, UPoly b) {
  utrim(a);
  utrim(b);
  while (!b.empty()) {
    UPoly r = urem(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

/// Binary form Q(w0, w1) restricted to w0 = 1, as a polynomial in w1.
inline UPoly dehomogenize_p1(const HomogeneousPoly& Q) {
  UPoly p(Q.degree() + 1);
  for (const auto& [m, c] : Q.terms()) p[m[1]] = c;
  utrim(p);
  return p;
}

inline std::string key_string(const StratumKey& key, const DivisorSum& D) {
  std::string s = "{";
  for (std::size_t i = 0; i < key.size(); ++i) s += (i ? ", " : "") + D.components()[key[i]].poly.to_string();
  return s + "}";
}

}  // namespace detail

/// Lambda = subsets of the prime components with a common zero. Linear
/// components are decided by exact rank; on P^1 forms of any degree by an
/// exact gcd; otherwise at most n hypersurfaces always meet in P^n, and
/// larger subsets involving a nonlinear component are rejected.
inline Stratification stratify(const DivisorSum& D, int n) {
  if (D.n() != n) throw ConfigError("divisor does not live on P^" + std::to_string(n));
  const auto& comps = D.components();
  const std::size_t q = comps.size();
  if (q > 20) throw ConfigError("stratification is capped at 20 components");
  for (const auto& c : comps)
    if (c.poly.degree() > 3) throw ConfigError("stratification needs components of degree at most 3");
  Stratification st;
  st.n = n;
  st.strata.push_back({{}, {}, {}, "whole space"});
  for (std::uint32_t mask = 1; mask < (1u << q); ++mask) {
    StratumKey key;
    bool linear = true;
    for (std::size_t j = 0; j < q; ++j)
      if (mask >> j & 1) {
        key.push_back(static_cast<int>(j));
        linear = linear && comps[j].poly.is_linear();
      }
    Stratum s;
    s.components = key;
    if (linear) {
      detail::GaussMatrix A;
      for (int j : key) A.push_back(comps[j].poly.linear_coefficients());
      const auto w = detail::exact_kernel_vector(A, n + 1);
      if (!w) continue;
      s.witness = *w;
      s.method = "exact kernel";
      // a hyperplane contains the locus iff its form lies in the row span
      for (std::size_t e = 0; e < q; ++e) {
        if (!comps[e].poly.is_linear()) {
          if (mask >> e & 1) s.through.push_back(static_cast<int>(e));
          continue;
        }
        auto B = A;
        B.push_back(comps[e].poly.linear_coefficients());
        if (exact_rank(B) == exact_rank(A)) s.through.push_back(static_cast<int>(e));
      }
    } else if (n == 1) {
      // common zero at [0:1] or a common root of the dehomogenized forms
      bool at_infinity = true;
      const auto w0 = HomogeneousPoly::coordinate(1, 0);
      for (int j : key) at_infinity = at_infinity && exact_divide(comps[j].poly, w0).has_value();
      detail::UPoly g;
      for (int j : key) g = g.empty() ? detail::dehomogenize_p1(comps[j].poly) : detail::ugcd(g, detail::dehomogenize_p1(comps[j].poly));
      if (!at_infinity && g.size() < 2) continue;
      s.method = at_infinity ? "common zero at [0:1]" : "exact gcd of degree " + std::to_string(g.size() - 1);
      if (at_infinity) s.witness = {GaussRat(0), GaussRat(1)};
      if (!at_infinity && g.size() == 2) s.witness = {GaussRat(1), -g[0] / g[1]};
      s.through = key;
    } else if (static_cast<int>(key.size()) <= n) {
      s.method = "dimension count: at most n hypersurfaces meet in P^n";
      s.through = key;
    } else {
      throw ConfigError("common zeros of " + detail::key_string(key, D) +
                        " need elimination beyond hyperplanes; not supported for n >= 2");
    }
    st.strata.push_back(std::move(s));
  }
  return st;
}

struct NevTriple {
  int k = 1;
  int d_L = 1;
  std::vector<HomogeneousPoly> V;                        ///< basis of the linear system, degree k * d_L
  std::map<StratumKey, std::vector<HomogeneousPoly>> bases;  ///< per stratum; V itself where absent
  Rational mu{1};
  std::string label;

  const std::vector<HomogeneousPoly>& basis_for(const StratumKey& key) const {
    const auto it = bases.find(key);
    return it == bases.end() ? V : it->second;
  }
};

struct CertificateEntry {
  StratumKey stratum;
  int component = 0;
  Rational order_sum{0};  ///< sum of ord_E over the stratum's basis
  Rational required{0};   ///< mu * ord_E(kD)
  Rational margin{0};
  bool pass = true;
};

struct NevCertificate {
  bool pass = false;
  int dim_V = 0;
  Rational mu{0};
  Rational bound{0};       ///< dim V / mu
  std::vector<CertificateEntry> entries;
  std::string failure;     ///< first violated (sigma, E), or the structural reason
};

namespace detail {

inline std::vector<std::vector<GaussRat>> coefficient_matrix(const std::vector<HomogeneousPoly>& polys) {
  std::vector<Monomial> basis;
  for (const auto& p : polys)
    for (const auto& [m, c] : p.terms())
      if (std::find(basis.begin(), basis.end(), m) == basis.end()) basis.push_back(m);
  std::vector<std::vector<GaussRat>> rows;
  for (const auto& p : polys) rows.push_back(coefficient_row(p, basis));
  return rows;
}

inline int poly_rank(const std::vector<HomogeneousPoly>& polys) { return exact_rank(coefficient_matrix(polys)); }

/// Structural checks of a triple; returns an empty string when it is well formed.
inline std::string triple_problem(const DivisorSum& D, const NevTriple& t) {
  if (t.k < 1 || t.d_L < 1) return "k and d_L must be positive";
  if (!(t.mu > 0)) return "mu must be positive";
  if (t.V.empty()) return "V is empty";
  for (const auto& p : t.V) {
    if (p.n() != D.n()) return "V lives on a different projective space";
    if (p.is_zero() || p.degree() != t.k * t.d_L) return "V must consist of nonzero forms of degree k * d_L";
  }
  const int dim = poly_rank(t.V);
  if (dim != static_cast<int>(t.V.size())) return "the given basis of V is linearly dependent";
  if (dim < 2) return "dim V must exceed 1";
  for (const auto& [key, basis] : t.bases) {
    if (static_cast<int>(basis.size()) != dim || poly_rank(basis) != dim)
      return "basis for stratum " + key_string(key, D) + " does not have dim V independent elements";
    auto all = t.V;
    all.insert(all.end(), basis.begin(), basis.end());
    if (poly_rank(all) != dim) return "basis for stratum " + key_string(key, D) + " does not span V";
  }
  return {};
}

}  // namespace detail

/// Exact check of Definition-1.1-type vanishing: for every stratum sigma and
/// every component E containing its locus, sum over the stratum's basis of
/// ord_E(s) >= mu * k * ord_E(D).
inline NevCertificate verify_triple(const DivisorSum& D, const NevTriple& t, const Stratification& st) {
  NevCertificate cert;
  cert.mu = t.mu;
  if (const auto problem = detail::triple_problem(D, t); !problem.empty()) {
    cert.failure = problem;
    return cert;
  }
  for (const auto& c : D.components()) {
    const auto irr = irreducibility(c.poly);
    if (!irr.irreducible) {
      cert.failure = "component " + c.poly.to_string() + " is reducible (" + irr.linear_factor->to_string() + " divides it)";
      return cert;
    }
  }
  cert.dim_V = static_cast<int>(t.V.size());
  cert.bound = Rational(cert.dim_V) / t.mu;
  cert.pass = true;
  for (const auto& s : st.strata) {
    if (s.components.empty()) continue;
    const auto& basis = t.basis_for(s.components);
    for (int e : s.through) {
      const auto& comp = D.components()[e];
      CertificateEntry entry;
      entry.stratum = s.components;
      entry.component = e;
      long long sum = 0;
      for (const auto& b : basis) sum += *ord_along(b, comp.poly);
      entry.order_sum = Rational(sum);
      entry.required = t.mu * Rational(t.k * comp.multiplicity);
      entry.margin = entry.order_sum - entry.required;
      entry.pass = entry.margin >= 0;
      if (!entry.pass && cert.pass) {
        cert.pass = false;
        std::ostringstream os;
        os << "sigma=" << detail::key_string(s.components, D) << ", E=" << comp.poly.to_string() << ": order sum "
           << entry.order_sum << " < mu*ord_E(kD) = " << entry.required;
        cert.failure = os.str();
      }
      cert.entries.push_back(std::move(entry));
    }
  }
  return cert;
}

inline NevCertificate verify_triple(const DivisorSum& D, const NevTriple& t) {
  return verify_triple(D, t, stratify(D, D.n()));
}

struct NevBound {
  std::optional<Rational> value;  ///< nullopt stands for +infinity
  int best = -1;                  ///< index of the candidate attaining the bound
  std::string explanation;
  std::vector<NevCertificate> certificates;
};

/// min dim V / mu over the verified candidates.
inline NevBound nev_upper_bound(const DivisorSum& D, const std::vector<NevTriple>& candidates) {
  NevBound out;
  if (candidates.empty()) {
    out.explanation = "no candidate triples; Nev is +infinity by convention";
    return out;
  }
  const auto st = stratify(D, D.n());
  out.certificates.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) { out.certificates[i] = verify_triple(D, candidates[i], st); });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = out.certificates[i];
    if (c.pass && (!out.value || c.bound < *out.value)) {
      out.value = c.bound;
      out.best = static_cast<int>(i);
    }
  }
  if (!out.value) {
    out.explanation = "no candidate verified; Nev is +infinity by convention";
  } else {
    std::ostringstream os;
    os << "candidate " << out.best << " verified with dim V = " << out.certificates[out.best].dim_V
       << " and mu = " << out.certificates[out.best].mu;
    out.explanation = os.str();
  }
  return out;
}

namespace detail {

/// All exponent vectors of total degree K in m variables, in lexicographic
/// order with the first variable's power decreasing.
inline std::vector<std::vector<int>> exponents(int m, int K) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(m, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == m - 1) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (int a = left; a >= 0; --a) {
      cur[i] = a;
      rec(i + 1, left - a);
    }
  };
  rec(0, K);
  return out;
}

/// Linear forms starting with the given independent ones, completed to a
/// basis of the dual space by coordinate forms.
inline std::vector<HomogeneousPoly> complete_to_basis(std::vector<HomogeneousPoly> forms, int n) {
  for (int k = 0; k <= n && static_cast<int>(forms.size()) <= n; ++k) {
    auto trial = forms;
    trial.push_back(HomogeneousPoly::coordinate(n, k));
    std::vector<std::vector<GaussRat>> rows;
    for (const auto& f : trial) rows.push_back(f.linear_coefficients());
    if (exact_rank(rows) == static_cast<int>(trial.size())) forms = std::move(trial);
  }
  return forms;
}

inline std::vector<HomogeneousPoly> monomial_basis(const std::vector<HomogeneousPoly>& L, int K) {
  const int n = L[0].n();
  std::vector<HomogeneousPoly> out;
  for (const auto& a : exponents(static_cast<int>(L.size()), K)) {
    HomogeneousPoly p = HomogeneousPoly::constant(n, GaussRat(1));
    for (std::size_t i = 0; i < L.size(); ++i)
      if (a[i]) p = p * pow(L[i], a[i]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

/// Bundled candidates for divisors made of hyperplanes: for each k <= k_max,
/// V is all forms of degree k * d_L, and the basis at a stratum is the
/// monomial basis in linear forms that begin with the stratum's own
/// (independent) hyperplanes. mu is the largest value the exact order sums
/// allow.
inline std::vector<NevTriple> bundled_candidates(const DivisorSum& D, int d_L = 1, int k_max = 2) {
  if (k_max < 1 || k_max > 6) throw ConfigError("bundled candidates support 1 <= k <= 6");
  if (d_L < 1) throw ConfigError("d_L must be positive");
  const int n = D.n();
  for (const auto& c : D.components())
    if (!c.poly.is_linear()) throw ConfigError("bundled candidates need hyperplane components");
  const auto st = stratify(D, n);
  std::vector<NevTriple> out;
  for (int k = 1; k <= k_max; ++k) {
    NevTriple t;
    t.k = k;
    t.d_L = d_L;
    t.label = "monomial filtration, k=" + std::to_string(k);
    std::vector<HomogeneousPoly> coords;
    for (int j = 0; j <= n; ++j) coords.push_back(HomogeneousPoly::coordinate(n, j));
    t.V = detail::monomial_basis(coords, k * d_L);
    for (const auto& s : st.strata) {
      if (s.components.empty()) continue;
      std::vector<HomogeneousPoly> lead;
      for (int j : s.components) {
        auto trial = lead;
        trial.push_back(D.components()[j].poly);
        std::vector<std::vector<GaussRat>> rows;
        for (const auto& f : trial) rows.push_back(f.linear_coefficients());
        if (exact_rank(rows) == static_cast<int>(trial.size())) lead = std::move(trial);
      }
      t.bases[s.components] = detail::monomial_basis(detail::complete_to_basis(lead, n), k * d_L);
    }
    // largest admissible mu from the order sums
    t.mu = Rational(1);
    const auto probe = verify_triple(D, t, st);
    std::optional<Rational> best;
    for (const auto& e : probe.entries) {
      const Rational ratio = e.order_sum / Rational(k * D.components()[e.component].multiplicity);
      if (!best || ratio < *best) best = ratio;
    }
    if (!best || !(*best > 0)) continue;
    t.mu = *best;
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full second main theorem check

struct SmtSettings {
  double delta = 0.1;
  double t_fraction = 0.1;  ///< the o(T) term is represented by t_fraction * T
  double slack = 10.0;      ///< allowance for the O(1) terms
  int veronese_degree = 0;  ///< degree used for the nondegeneracy test; 0 picks the largest component degree
};

/// Monomials of degree e in the curve's components.
inline std::vector<HoloExpr> veronese(const ProjectiveCurve& curve, int e) {
  const auto& f = curve.components();
  std::vector<HoloExpr> out;
  for (const auto& a : detail::exponents(static_cast<int>(f.size()), e)) {
    HoloExpr p = HoloExpr::constant(1.0);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (a[i]) p = p * pow(f[i], a[i]);
    out.push_back(std::move(p));
  }
  return out;
}

/// bound * T_{f,L} + t_fraction * T + |kappa| r^2 + log+ log r - m_f(r, D).
inline InequalityTrace smt_full_check(const ProjectiveCurve& curve, const DivisorSum& D, int d_L, double bound,
                                      const SurfaceModel& surface, const RGrid& grid, const SmtSettings& s = {},
                                      const QuadSettings& q = {}) {
  grid.validate(surface);
  if (d_L < 1) throw ConfigError("d_L must be positive");
  if (!(bound > 0.0)) throw ConfigError("the Nevanlinna bound must be positive");
  if (static_cast<int>(curve.components().size()) != D.n() + 1) throw ConfigError("curve and divisor dimensions differ");
  int e = s.veronese_degree;
  if (e == 0)
    for (const auto& c : D.components()) e = std::max(e, c.poly.degree());
  if (e < 1 || e > 3) throw ConfigError("Veronese degree for the nondegeneracy test must be between 1 and 3");
  if (!linearly_independent(veronese(curve, e)))
    throw ConfigError("curve is degenerate: its degree-" + std::to_string(e) +
                      " Veronese image satisfies a linear relation, so Zariski density is not certified");
  const WeilSpec spec{D, WeilNorm::l2};
  InequalityTrace tr;
  tr.name = "smt_full";
  tr.rows.resize(grid.radii.size());
  parallel_for(grid.radii.size(), [&](std::size_t i) {
    TraceRow row;
    row.r = grid.radii[i];
    row.T = characteristic_T(curve, d_L, surface, row.r, q);
    row.lhs = proximity_m(curve, spec, surface, row.r, q).value;
    row.main = bound * row.T;
    row.log_t = s.t_fraction * row.T;
    row.curvature = detail::curvature_term(surface, row.r);
    row.loglog = detail::loglog_r(row.r);
    row.rhs = row.main + row.log_t + row.curvature + row.loglog;
    row.margin = row.rhs - row.lhs;
    row.ratio = row.lhs / row.rhs;
    row.allowance = s.slack;
    // Corollary-type growth hypothesis: kappa(r) r^2 / T should tend to 0
    row.extra.push_back({"kappa_r2_over_T", row.T > 0.0 ? row.curvature / row.T : std::numeric_limits<double>::infinity()});
    tr.rows[i] = std::move(row);
  });
  detail::apply_borel(tr, s.delta);
  return tr;
}

}  // namespace nevlab
