#pragma once

// Inequality harnesses for the second-main-theorem chain: logarithmic
// derivative lemma, derivative growth, calculus lemma, Borel exceptional
// sets, the Cartan-type max_Q bound and log-Wronskian proximity.
//
// The asymptotic inequalities carry unspecified constants, so every harness
// records its left side, the components of its right side and a margin, and
// marks radii excluded by the Borel mechanism. A row passes when it is
// flagged or when margin >= -allowance, where the allowance is the declared
// slack of that harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nevlab/divisor.hpp"
#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/nevanlinna.hpp"
#include "nevlab/parallel.hpp"
#include "nevlab/quadrature.hpp"
#include "nevlab/stochastic.hpp"
#include "nevlab/surface.hpp"

namespace nevlab {

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

struct TraceRow {
  double r = 0.0;
  double T = 0.0;           ///< growth function the row is measured against
  double lhs = 0.0;
  double main = 0.0;        ///< leading right-hand term
  double log_t = 0.0;       ///< log-of-T error term
  double curvature = 0.0;   ///< |kappa(r)| r^2
  double loglog = 0.0;      ///< log+ log r
  double rhs = 0.0;
  double margin = 0.0;      ///< rhs - lhs
  double ratio = 0.0;       ///< lhs / rhs
  double allowance = 0.0;   ///< declared slack; the row passes when margin >= -allowance
  bool flagged = false;
  std::string reason;       ///< set exactly when flagged
  std::vector<std::pair<std::string, double>> extra;

  bool ok() const { return flagged || (std::isfinite(margin) && margin >= -allowance); }
};

struct InequalityTrace {
  std::string name;
  std::vector<TraceRow> rows;
  double flagged_measure = 0.0;  ///< Borel-excluded length of the grid

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const TraceRow& row) { return row.ok(); });
  }
  double worst_margin_excess() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
      if (!row.flagged) w = std::min(w, row.margin + row.allowance);
    return w;
  }
  double max_unflagged_ratio(double r_min = 0.0) const {
    double w = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
      if (!row.flagged && row.r >= r_min) w = std::max(w, row.ratio);
    return w;
  }
};

// ---------------------------------------------------------------------------
// Borel lemma

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct BorelReport {
  double delta = 0.0;
  double gamma = 0.0;               ///< first grid radius with T >= e
  std::vector<Interval> intervals;  ///< grid cells containing a failure of T' <= T log^{1+delta} T
  double measure = 0.0;
  double c_phi = 0.0;               ///< int_e^inf dt / (t log^{1+delta} t) = 1/delta
  double resolution = 0.0;          ///< largest grid cell

  bool contains(double r) const {
    return std::any_of(intervals.begin(), intervals.end(), [&](const Interval& iv) { return r >= iv.lo && r <= iv.hi; });
  }
};

/// Borel exceptional set from samples of log T. On a cell [a, b] with
/// T(b) >= e, the mean value theorem gives a point xi with
/// (log T)'(xi) = (log T(b) - log T(a)) / (b - a); since log^{1+delta} T is
/// non-decreasing, a secant above log^{1+delta} T(b) certifies a failure
/// inside the cell. Flagged cells are therefore genuine up to grid resolution.
inline BorelReport borel_exceptional_log(const std::vector<double>& r, const std::vector<double>& log_T, double delta) {
  if (!(delta > 0.0)) throw ConfigError("Borel lemma needs delta > 0");
  if (r.size() != log_T.size() || r.size() < 2) throw DataError("Borel lemma needs at least two samples");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(log_T[i])) throw DataError("T samples must be finite and strictly positive");
    if (i && !(r[i] > r[i - 1])) throw DataError("radii must be strictly increasing");
    if (i && log_T[i] < log_T[i - 1]) throw DataError("T samples must be non-decreasing");
  }
  BorelReport rep;
  rep.delta = delta;
  rep.c_phi = 1.0 / delta;
  rep.gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i)
    if (log_T[i] >= 1.0) {
      rep.gamma = r[i];
      break;
    }
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double dr = r[i + 1] - r[i];
    rep.resolution = std::max(rep.resolution, dr);
    if (r[i] < rep.gamma) continue;
    const double secant = (log_T[i + 1] - log_T[i]) / dr;
    if (secant > std::pow(log_T[i + 1], 1.0 + delta)) {
      if (!rep.intervals.empty() && rep.intervals.back().hi == r[i])
        rep.intervals.back().hi = r[i + 1];
      else
        rep.intervals.push_back({r[i], r[i + 1]});
    }
  }
  for (const auto& iv : rep.intervals) rep.measure += iv.hi - iv.lo;
  return rep;
}

inline BorelReport borel_exceptional(const std::vector<double>& r, const std::vector<double>& T, double delta) {
  std::vector<double> lt(T.size());
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(T[i] > 0.0)) throw DataError("T samples must be strictly positive");
    lt[i] = std::log(T[i]);
  }
  return borel_exceptional_log(r, lt, delta);
}

namespace detail {

/// Flags rows below the lemma's starting radius or inside Borel cells, and
/// records the excluded measure on the trace.
inline void apply_borel(InequalityTrace& tr, double delta) {
  std::vector<double> r, lt;
  for (const auto& row : tr.rows) {
    r.push_back(row.r);
    lt.push_back(row.T > 0.0 ? std::log(row.T) : -std::numeric_limits<double>::infinity());
  }
  // the lemma needs a positive non-decreasing T; a running maximum keeps
  // quadrature noise from tripping the monotonicity check
  double run = -std::numeric_limits<double>::infinity();
  for (auto& v : lt) {
    run = std::max(run, v);
    v = run;
  }
  std::size_t first = 0;
  while (first < lt.size() && !std::isfinite(lt[first])) ++first;
  for (std::size_t i = 0; i < first; ++i) {
    tr.rows[i].flagged = true;
    tr.rows[i].reason = "T(r) is zero";
  }
  if (lt.size() - first >= 2) {
    const auto rep = borel_exceptional_log(std::vector<double>(r.begin() + first, r.end()),
                                           std::vector<double>(lt.begin() + first, lt.end()), delta);
    tr.flagged_measure = rep.measure;
    for (std::size_t i = first; i < tr.rows.size(); ++i) {
      auto& row = tr.rows[i];
      if (row.flagged) continue;
      if (row.r < rep.gamma) {
        row.flagged = true;
        row.reason = "T(r) < e, before the Borel lemma applies";
      } else if (rep.contains(row.r)) {
        row.flagged = true;
        row.reason = "Borel exceptional cell: T' > T log^{1+delta} T";
      }
    }
  }
}

inline double curvature_term(const SurfaceModel& surface, double r) {
  return std::abs(surface.kappa(r)) * r * r;
}

inline double loglog_r(double r) { return r > 1.0 ? log_plus(std::log(r)) : 0.0; }

inline void check_nonconstant(const MeromorphicFn& psi) {
  if (psi.is_constant()) throw ConfigError("the function must be nonconstant");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Logarithmic derivative lemma

/// X^k(psi) / psi as a quotient of expressions: with X^k(psi) = P_k / D^{k+1}
/// and psi = P / D, the ratio is P_k / (D^k P).
inline MeromorphicFn log_derivative(const MeromorphicFn& psi, const VectorField& field, int k) {
  if (k < 1) throw ConfigError("derivative order must be at least 1");
  if (psi.numerator.is_zero()) throw ConfigError("log derivative of the zero function");
  const MeromorphicFn xk = xderive(psi, field, k);
  return MeromorphicFn(xk.numerator, pow(psi.denominator, k) * psi.numerator);
}

/// m(r, X^k(psi)/psi): circle mean of log+ |X^k(psi)/psi|.
inline double log_derivative_m(const MeromorphicFn& psi, const VectorField& field, int k, const SurfaceModel& surface,
                               double r, const QuadSettings& q = {}) {
  detail::check_nonconstant(psi);
  return merom_proximity(log_derivative(psi, field, k), surface.euclidean_radius(r), q);
}

struct LdlSettings {
  double delta = 0.1;   ///< Borel exponent
  double slack = 0.1;   ///< rows pass when the ratio is at most 1 + slack
};

/// m(r, X^k psi / psi) against (3k/2) log T + |kappa| r^2 + log+ log r + 1,
/// with T the classical characteristic m(r, psi) + N(r, psi).
inline InequalityTrace ldl_report(const MeromorphicFn& psi, const VectorField& field, int k, const SurfaceModel& surface,
                                  const RGrid& grid, const LdlSettings& s = {}, const QuadSettings& q = {}) {
  detail::check_nonconstant(psi);
  grid.validate(surface);
  InequalityTrace tr;
  tr.name = "ldl";
  tr.rows.resize(grid.radii.size());
  parallel_for(grid.radii.size(), [&](std::size_t i) {
    TraceRow row;
    row.r = grid.radii[i];
    row.T = merom_T(psi, surface, row.r, q, false).T_classic;
    row.lhs = log_derivative_m(psi, field, k, surface, row.r, q);
    const double logT = row.T > 0.0 ? std::log(row.T) : -std::numeric_limits<double>::infinity();
    row.main = 1.5 * k * std::max(logT, 0.0);
    row.log_t = log_plus(std::max(logT, 0.0));
    row.curvature = detail::curvature_term(surface, row.r);
    row.loglog = detail::loglog_r(row.r);
    row.rhs = row.main + row.curvature + row.loglog + 1.0;
    row.margin = row.rhs - row.lhs;
    row.ratio = row.lhs / row.rhs;
    row.allowance = s.slack * row.rhs;
    row.extra.push_back({"lhs_over_logT", logT > 0.0 ? row.lhs / logT : std::numeric_limits<double>::quiet_NaN()});
    tr.rows[i] = std::move(row);
  });
  detail::apply_borel(tr, s.delta);
  return tr;
}

struct GrowthSettings {
  double delta = 0.1;
  double slack = 10.0;  ///< absolute allowance standing in for the O(1) of the claim
};

/// 2^k T(r, psi) + log+ T + |kappa| r^2 + log+ log r - T(r, X^k psi).
inline InequalityTrace derivative_growth_check(const MeromorphicFn& psi, const VectorField& field, int k,
                                               const SurfaceModel& surface, const RGrid& grid,
                                               const GrowthSettings& s = {}, const QuadSettings& q = {}) {
  detail::check_nonconstant(psi);
  if (k < 1) throw ConfigError("derivative order must be at least 1");
  grid.validate(surface);
  const MeromorphicFn xk = xderive(psi, field, k);
  InequalityTrace tr;
  tr.name = "derivative_growth";
  tr.rows.resize(grid.radii.size());
  parallel_for(grid.radii.size(), [&](std::size_t i) {
    TraceRow row;
    row.r = grid.radii[i];
    row.T = merom_T(psi, surface, row.r, q, false).T_classic;
    row.lhs = merom_T(xk, surface, row.r, q, false).T_classic;
    row.main = std::ldexp(row.T, k);
    row.log_t = log_plus(row.T);
    row.curvature = detail::curvature_term(surface, row.r);
    row.loglog = detail::loglog_r(row.r);
    row.rhs = row.main + row.log_t + row.curvature + row.loglog;
    row.margin = row.rhs - row.lhs;
    row.ratio = row.lhs / row.rhs;
    row.allowance = s.slack;
    tr.rows[i] = std::move(row);
  });
  detail::apply_borel(tr, s.delta);
  return tr;
}

// ---------------------------------------------------------------------------
// Calculus lemma

struct CalculusSettings {
  double delta = 0.1;
  double C = 1.0;            ///< the lemma's existential constant, fixed here
  double ratio_bound = 1.0;  ///< rows pass when the ratio is at most this
  std::optional<PathPolicy> mc;  ///< Monte Carlo cross-check of the occupation integral
};

/// F(k_hat, kappa, delta) exactly as displayed in the lemma.
inline double calculus_F(double k_hat, double r, double kappa, double delta) {
  const double lk = log_plus(k_hat);
  const double growth = r * std::exp(r * std::sqrt(std::max(0.0, -kappa)));
  const double inner = log_plus(growth * k_hat * std::pow(lk, 1.0 + delta));
  return std::pow(lk * inner, 1.0 + delta);
}

/// E[k(X_tau)] (circle mean, uniform harmonic measure) against
/// E[int_0^tau k(X_t) dt] (Green quadrature). The ratio recorded is
/// E[k(X_tau)] / (E[int k] e^{r sqrt(-kappa)} log r (1 + F)); the lemma's literal
/// right side F e^{r sqrt(-kappa)} log r E[int k] / (2 pi C) is kept as `main`.
inline InequalityTrace calculus_lemma_report(const SurfaceModel& surface, const SurfaceFn& kfun, const RGrid& grid,
                                             const CalculusSettings& s = {}, const QuadSettings& q = {}) {
  grid.validate(surface);
  if (!(s.C > 0.0) || !(s.delta > 0.0)) throw ConfigError("calculus lemma needs C > 0 and delta > 0");
  {
    const double k0 = kfun(0.0);
    if (!std::isfinite(k0) || k0 < 0.0) throw ConfigError("kfun must be finite and non-negative at the origin");
  }
  InequalityTrace tr;
  tr.name = "calculus_lemma";
  tr.rows.resize(grid.radii.size());
  for (std::size_t i = 0; i < grid.radii.size(); ++i) {
    TraceRow row;
    row.r = grid.radii[i];
    const double rho = surface.euclidean_radius(row.r);
    const double boundary = detail::circle_mean(
                                [&](cplx z) {
                                  const double v = kfun(z);
                                  if (v < 0.0) throw ConfigError("kfun must be non-negative");
                                  return v;
                                },
                                rho, q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes)
                                .value;
    const double occ = green_integral(surface, kfun, row.r);
    if (!std::isfinite(occ)) throw ConfigError("kfun is not integrable against the Green function");
    const double kappa = surface.kappa(row.r);
    const double expo = std::exp(row.r * std::sqrt(std::max(0.0, -kappa)));
    const double logr = std::log(row.r);
    const double k_hat = logr / s.C * occ;
    const double F = calculus_F(k_hat, row.r, kappa, s.delta);
    row.T = k_hat;
    row.lhs = boundary;
    row.main = F * expo * logr / (2.0 * std::numbers::pi * s.C) * occ;
    row.curvature = row.r * std::sqrt(std::max(0.0, -kappa));
    row.loglog = detail::loglog_r(row.r);
    row.rhs = occ * expo * logr * (1.0 + F);
    row.ratio = row.lhs / row.rhs;
    row.margin = s.ratio_bound * row.rhs - row.lhs;
    row.allowance = 0.0;
    row.extra.push_back({"occupation", occ});
    row.extra.push_back({"F", F});
    row.extra.push_back({"lemma_margin", row.main - row.lhs});
    if (s.mc) {
      const auto est = occupation_estimate(surface, kfun, row.r, *s.mc).estimate;
      row.extra.push_back({"occupation_mc", est.mean});
      row.extra.push_back({"occupation_mc_stderr", est.stderr_});
    }
    tr.rows[i] = std::move(row);
  }
  for (auto& row : tr.rows)
    if (!(row.r > 1.0)) {
      row.flagged = true;
      row.reason = "the lemma is stated for r > 1";
    }
  // exceptional cells come from the growth of k_hat
  InequalityTrace sub;
  for (const auto& row : tr.rows)
    if (row.r > 1.0) sub.rows.push_back(row);
  if (!sub.rows.empty()) {
    detail::apply_borel(sub, s.delta);
    tr.flagged_measure = sub.flagged_measure;
    std::size_t j = 0;
    for (auto& row : tr.rows)
      if (row.r > 1.0) {
        const auto& sr = sub.rows[j++];
        if (sr.flagged) {
          row.flagged = true;
          row.reason = sr.reason;
        }
      }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Cartan-type bound

namespace detail {

inline std::vector<GaussRat> coefficient_row(const HomogeneousPoly& p, const std::vector<Monomial>& basis) {
  std::vector<GaussRat> row(basis.size());
  for (const auto& [m, c] : p.terms()) {
    const auto it = std::find(basis.begin(), basis.end(), m);
    row[std::size_t(it - basis.begin())] = c;
  }
  return row;
}

/// Index masks of the linearly independent subsets (exact rank). With
/// `maximal_only`, subsets strictly contained in another independent subset
/// are dropped.
inline std::vector<std::uint32_t> independent_subsets(const std::vector<HomogeneousPoly>& sections, bool maximal_only) {
  const std::size_t q = sections.size();
  if (q == 0) throw ConfigError("no sections given");
  if (q > 12) throw ConfigError("subset enumeration is capped at 12 sections");
  for (const auto& s : sections) {
    if (s.is_zero()) throw ConfigError("sections must be nonzero");
    if (s.n() != sections[0].n() || s.degree() != sections[0].degree())
      throw ConfigError("sections must share ambient dimension and degree");
  }
  std::vector<Monomial> basis;
  for (const auto& s : sections)
    for (const auto& [m, c] : s.terms())
      if (std::find(basis.begin(), basis.end(), m) == basis.end()) basis.push_back(m);
  std::vector<std::vector<GaussRat>> rows;
  for (const auto& s : sections) rows.push_back(coefficient_row(s, basis));
  std::vector<char> indep(std::size_t{1} << q, 0);
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 1; mask < (1u << q); ++mask) {
    std::vector<std::vector<GaussRat>> sub;
    for (std::size_t k = 0; k < q; ++k)
      if (mask >> k & 1) sub.push_back(rows[k]);
    indep[mask] = exact_rank(sub) == static_cast<int>(sub.size());
  }
  for (std::uint32_t mask = 1; mask < (1u << q); ++mask) {
    if (!indep[mask]) continue;
    if (maximal_only) {
      bool extendable = false;
      for (std::size_t k = 0; k < q && !extendable; ++k)
        if (!(mask >> k & 1) && indep[mask | (1u << k)]) extendable = true;
      if (extendable) continue;
    }
    out.push_back(mask);
  }
  return out;
}

}  // namespace detail

/// Circle mean of max_Q sum_{k in Q} lambda_{s_k}(f) over the linearly
/// independent subsets Q. With the l2 norm every lambda is non-negative, so
/// only maximal subsets are scanned.
inline double max_sum_weil_boundary(const ProjectiveCurve& curve, const std::vector<HomogeneousPoly>& sections,
                                    const SurfaceModel& surface, double r, WeilNorm norm = WeilNorm::l2,
                                    const QuadSettings& q = {}) {
  const auto& f = curve.components();
  const auto masks = detail::independent_subsets(sections, norm == WeilNorm::l2);
  if (static_cast<int>(f.size()) != sections[0].n() + 1) throw ConfigError("curve and sections dimensions differ");
  std::vector<HoloExpr> g;
  std::vector<double> log_cn;
  for (const auto& s : sections) {
    g.push_back(compose(s, f));
    if (g.back().is_zero()) throw ConfigError("the curve lies inside the zero set of " + s.to_string());
    log_cn.push_back(std::log(norm == WeilNorm::max ? s.coefficient_norm_max() : s.coefficient_norm_l2()));
  }
  const int d = sections[0].degree();
  const double rho = surface.euclidean_radius(r);
  auto integrand = [&](cplx z) {
    const double ln = detail::curve_log_norm(curve, z, norm);
    std::vector<double> lam(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) lam[k] = d * ln + log_cn[k] - detail::log_abs_or_inf(g[k], z);
    double best = -std::numeric_limits<double>::infinity();
    for (auto mask : masks) {
      double s = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (mask >> k & 1) s += lam[k];
      best = std::max(best, s);
    }
    return best;
  };
  return detail::circle_mean(integrand, rho, q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes).value;
}

struct CartanSettings {
  double delta = 0.1;
  double slack_log = 0.5;     ///< allowance = slack_log * log T + slack_const
  double slack_const = 10.0;
};

/// (n+1) T_f + log+ T_f + |kappa| r^2 + log+ log r - max_sum_weil_boundary.
inline InequalityTrace cartan_smt_report(const ProjectiveCurve& curve, const std::vector<HomogeneousPoly>& hyperplanes,
                                         const SurfaceModel& surface, const RGrid& grid, const CartanSettings& s = {},
                                         const QuadSettings& q = {}) {
  grid.validate(surface);
  const int n = static_cast<int>(curve.dimension());
  for (const auto& h : hyperplanes)
    if (!h.is_linear()) throw ConfigError("Cartan harness needs hyperplanes");
  if (!linearly_independent(curve.components()))
    throw ConfigError("curve is linearly degenerate: its Wronskian " +
                      wronskian(curve.components(), VectorField()).to_string() + " vanishes identically");
  if (!general_position_check(hyperplanes, n)) throw ConfigError("hyperplanes are not in general position");
  InequalityTrace tr;
  tr.name = "cartan";
  tr.rows.resize(grid.radii.size());
  parallel_for(grid.radii.size(), [&](std::size_t i) {
    TraceRow row;
    row.r = grid.radii[i];
    row.T = characteristic_T(curve, 1, surface, row.r, q);
    row.lhs = max_sum_weil_boundary(curve, hyperplanes, surface, row.r, WeilNorm::l2, q);
    row.main = (n + 1) * row.T;
    row.log_t = log_plus(row.T);
    row.curvature = detail::curvature_term(surface, row.r);
    row.loglog = detail::loglog_r(row.r);
    row.rhs = row.main + row.log_t + row.curvature + row.loglog;
    row.margin = row.rhs - row.lhs;
    row.ratio = row.lhs / row.rhs;
    row.allowance = s.slack_log * log_plus(row.T) + s.slack_const;
    tr.rows[i] = std::move(row);
  });
  detail::apply_borel(tr, s.delta);
  return tr;
}

struct LogWronskianResult {
  double m = 0.0;          ///< mean of log+ |Delta_X| on the circle
  double reference = 0.0;  ///< log+ T_f + |kappa| r^2 + log+ log r
};

/// m(r, Delta_X(H_k(f), k in Q)) with Delta_X the determinant of
/// X^j(H_k f) / H_k f.
inline LogWronskianResult log_wronskian_proximity(const ProjectiveCurve& curve,
                                                  const std::vector<HomogeneousPoly>& hyperplanes,
                                                  const VectorField& field, const SurfaceModel& surface, double r,
                                                  const QuadSettings& q = {}) {
  const auto& f = curve.components();
  if (hyperplanes.size() != f.size()) throw ConfigError("log-Wronskian needs exactly n+1 hyperplanes");
  std::vector<HoloExpr> g;
  for (const auto& h : hyperplanes) {
    if (!h.is_linear()) throw ConfigError("log-Wronskian needs hyperplanes");
    g.push_back(compose(h, f));
    if (g.back().is_zero()) throw ConfigError("H(f) vanishes identically for " + h.to_string());
  }
  const double rho = surface.euclidean_radius(r);
  LogWronskianResult out;
  out.m = detail::circle_mean([&](cplx z) { return log_plus(std::abs(log_wronskian_eval(g, field, z))); }, rho,
                              q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes)
              .value;
  out.reference = log_plus(characteristic_T(curve, 1, surface, r, q)) + detail::curvature_term(surface, r) +
                  detail::loglog_r(r);
  return out;
}

}  // namespace nevlab
