#pragma once

// Quadrature engine for the Nevanlinna functions T, m, N of holomorphic
// curves into P^n on the radial surface models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nevlab/divisor.hpp"
#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/parallel.hpp"
#include "nevlab/quadrature.hpp"
#include "nevlab/rng.hpp"
#include "nevlab/roots.hpp"
#include "nevlab/surface.hpp"

namespace nevlab {

enum class TMethod { area, jensen };

struct QuadSettings {
  double boundary_tol = 1e-7;
  std::size_t boundary_min_nodes = 64;
  std::size_t boundary_max_nodes = std::size_t{1} << 18;
  double radial_tol = 1e-8;
  double angular_tol = 1e-9;
  std::size_t angular_min_nodes = 128;
  TMethod t_method = TMethod::area;
  double near_band = 0.05;  ///< relative annulus for zero subtraction
};

/// Sample radii (geodesic) for a Nevanlinna report.
struct RGrid {
  std::vector<double> radii;

  static RGrid linear(double lo, double hi, int count) {
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("invalid linear r-grid");
    RGrid g;
    for (int i = 0; i < count; ++i) g.radii.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return g;
  }
  static RGrid log_spaced(double lo, double hi, int count) {
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("invalid log r-grid");
    RGrid g;
    for (int i = 0; i < count; ++i)
      g.radii.push_back(count == 1 ? lo : lo * std::pow(hi / lo, double(i) / (count - 1)));
    g.radii.back() = hi;
    return g;
  }
  void validate(const SurfaceModel& s) const {
    if (radii.empty()) throw ConfigError("empty r-grid");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0.0)) throw ConfigError("r-grid radii must be positive");
      if (i && !(radii[i] > radii[i - 1])) throw ConfigError("r-grid must be strictly increasing");
    }
    (void)s.euclidean_radius(radii.back());
  }
};

namespace detail {

/// Circle mean of fn(z) on |z| = rho, stepping the node set off singular
/// points by rotating it. Integrands with kinks (log+, maxima) defeat the
/// trapezoid rule's spectral convergence; when node doubling runs out they
/// are integrated by adaptive Gauss-Kronrod, which bisects through kinks.
template <class Fn>
quad::PeriodicResult circle_mean(Fn&& fn, double rho, double tol, std::size_t n_min, std::size_t n_max) {
  static constexpr double offsets[] = {0.0, 0.318309886, 0.707106781, 0.141421356, 0.577215665};
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      const double off = offsets[attempt] * quad::two_pi / double(n_min);
      return quad::periodic_mean([&](double th) { return fn(std::polar(rho, th)); }, tol, n_min, n_max, off);
    } catch (const SingularPointError&) {
      if (attempt + 1 == std::size(offsets)) throw;
    } catch (const NumericalError&) {
      return quad::kronrod_mean([&](double th) { return fn(std::polar(rho, th)); }, tol);
    }
  }
}

inline double log_abs_or_inf(const HoloExpr& g, cplx z) {
  const auto e = g.evaluate(z);
  if (e.vanishes(1e-14)) return -std::numeric_limits<double>::infinity();
  return e.value.log_abs();
}

inline double curve_log_norm(const ProjectiveCurve& c, cplx z, WeilNorm norm) {
  if (norm == WeilNorm::l2) return log_norm(c, z);
  return eval_projective(c, z).log_scale;  // max |direction| = 1
}

}  // namespace detail

/// Green-weighted Fubini-Study area T_{f,O(d)}(r): with rho = rho_e(r),
/// d * int_{|z|<rho} log(rho/|z|) fs_density dA. The Jensen route evaluates
/// the same quantity as d * (mean log|f| on |z| = rho - log|f(0)|).
inline double characteristic_T(const ProjectiveCurve& curve, int d, const SurfaceModel& surface, double r,
                               const QuadSettings& q = {}) {
  if (d < 1) throw ConfigError("line bundle degree must be positive");
  if (!(r > 0.0)) throw RangeError("characteristic_T needs r > 0");
  if (curve.is_constant()) return 0.0;
  const double rho = surface.euclidean_radius(r);
  if (q.t_method == TMethod::jensen) {
    const auto mean = detail::circle_mean([&](cplx z) { return log_norm(curve, z); }, rho, q.boundary_tol,
                                          q.boundary_min_nodes, q.boundary_max_nodes);
    return d * (mean.value - log_norm(curve, 0.0));
  }
  auto ring = [&](double t) {
    auto fs = [&](double th) { return fs_density(curve, std::polar(t, th)); };
    double inner;
    try {
      inner = quad::periodic_mean(fs, q.angular_tol, q.angular_min_nodes).value;
    } catch (const NumericalError&) {
      inner = quad::kronrod_mean(fs, q.angular_tol).value;
    }
    return quad::two_pi * t * inner;
  };
  return d * quad::log_weighted_radial(ring, rho, q.radial_tol);
}

struct ProximityResult {
  double value = 0.0;
  std::size_t nodes = 0;
  int subtracted_zeros = 0;  ///< zeros near the circle handled in closed form
};

/// m_f(r, D): mean over |z| = rho_e(r) of the Weil function of D along f.
/// Zeros of Q_j(f) close to the circle make the integrand slowly convergent;
/// when plain node doubling fails they are divided out and their circle mean
/// log max(rho, |a|) is added back in closed form.
inline ProximityResult proximity_m(const ProjectiveCurve& curve, const WeilSpec& spec, const SurfaceModel& surface,
                                   double r, const QuadSettings& q = {}) {
  const auto& f = curve.components();
  if (static_cast<int>(f.size()) != spec.divisor.n() + 1) throw ConfigError("curve and divisor dimensions differ");
  const double rho = surface.euclidean_radius(r);
  ProximityResult out;
  for (const auto& comp : spec.divisor.components()) {
    const HoloExpr g = compose(comp.poly, f);
    if (g.is_zero()) throw ConfigError("the curve lies inside the divisor component " + comp.poly.to_string());
    const double cn = spec.norm == WeilNorm::max ? comp.poly.coefficient_norm_max() : comp.poly.coefficient_norm_l2();
    const int dj = comp.poly.degree();
    auto lambda = [&](cplx z) {
      return dj * detail::curve_log_norm(curve, z, spec.norm) + std::log(cn) - detail::log_abs_or_inf(g, z);
    };
    quad::PeriodicResult res;
    try {
      res = detail::circle_mean(lambda, rho, q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes >> 2);
    } catch (const Error&) {
      const auto zs = zeros_in_disc(g, rho * (1.0 + q.near_band));
      std::vector<Root> near;
      for (const auto& z : zs.interior)
        if (std::abs(z.z) >= rho * (1.0 - q.near_band)) near.push_back(z);
      for (const auto& z : zs.boundary) near.push_back(z);
      double closed = 0.0;
      for (const auto& a : near) closed += a.multiplicity * std::log(std::max(rho, std::abs(a.z)));
      auto smooth = [&](cplx z) {
        double s = detail::log_abs_or_inf(g, z);
        for (const auto& a : near) s -= a.multiplicity * std::log(std::abs(z - a.z));
        return dj * detail::curve_log_norm(curve, z, spec.norm) + std::log(cn) - s;
      };
      try {
        res = detail::circle_mean(smooth, rho, q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes);
      } catch (const SingularPointError&) {
        throw SingularPointError("Weil function is singular on |z| = " + std::to_string(rho));
      }
      res.value -= closed;
      for (const auto& a : near) out.subtracted_zeros += a.multiplicity;
    }
    out.value += comp.multiplicity * res.value;
    out.nodes += res.nodes;
  }
  return out;
}

struct CountingResult {
  double value = 0.0;
  int zeros = 0;           ///< preimages in |z| < rho, with multiplicity
  int boundary_zeros = 0;  ///< preimages on |z| = rho, weighted 0 and flagged
};

/// N_f(r, D) = sum_j c_j sum_k log(rho / |z_k|) over the zeros of Q_j(f).
inline CountingResult counting_N(const ProjectiveCurve& curve, const DivisorSum& divisor, const SurfaceModel& surface,
                                 double r) {
  const auto& f = curve.components();
  if (static_cast<int>(f.size()) != divisor.n() + 1) throw ConfigError("curve and divisor dimensions differ");
  const double rho = surface.euclidean_radius(r);
  CountingResult out;
  for (const auto& comp : divisor.components()) {
    const HoloExpr g = compose(comp.poly, f);
    if (g.is_zero()) throw ConfigError("the curve lies inside the divisor component " + comp.poly.to_string());
    if (g.evaluate(0.0).vanishes(1e-14)) throw ConfigError("f(o) lies on the divisor component " + comp.poly.to_string());
    const auto zs = zeros_in_disc(g, rho);
    for (const auto& a : zs.interior) {
      out.value += comp.multiplicity * a.multiplicity * std::log(rho / std::abs(a.z));
      out.zeros += comp.multiplicity * a.multiplicity;
    }
    for (const auto& a : zs.boundary) out.boundary_zeros += comp.multiplicity * a.multiplicity;
  }
  return out;
}

struct NevRow {
  double r = 0.0, rho = 0.0;
  double T = 0.0, T_jensen = 0.0, m = 0.0, N = 0.0;
  double residual = 0.0;      ///< T - m - N
  double defect_ratio = 0.0;  ///< m / T
  int boundary_zeros = 0;
};

struct NevReport {
  std::vector<NevRow> rows;
  int degree = 1;

  double residual_oscillation() const {
    if (rows.empty()) return 0.0;
    double lo = rows[0].residual, hi = lo;
    for (const auto& row : rows) {
      lo = std::min(lo, row.residual);
      hi = std::max(hi, row.residual);
    }
    return hi - lo;
  }
};

/// T, m, N and the First Main Theorem residual T - m - N on a grid, with
/// L = O(deg D). Radii are processed in parallel.
inline NevReport fmt_residual(const ProjectiveCurve& curve, const WeilSpec& spec, const SurfaceModel& surface,
                              const RGrid& grid, const QuadSettings& q = {}) {
  grid.validate(surface);
  const int d = spec.divisor.total_degree();
  {
    const double w0 = weil(spec, eval_projective(curve, 0.0));
    if (!std::isfinite(w0)) throw ConfigError("f(o) lies on Supp D");
  }
  NevReport rep;
  rep.degree = d;
  rep.rows.resize(grid.radii.size());
  QuadSettings qj = q;
  qj.t_method = TMethod::jensen;
  parallel_for(grid.radii.size(), [&](std::size_t i) {
    NevRow row;
    row.r = grid.radii[i];
    row.rho = surface.euclidean_radius(row.r);
    row.T = characteristic_T(curve, d, surface, row.r, q);
    row.T_jensen = q.t_method == TMethod::jensen ? row.T : characteristic_T(curve, d, surface, row.r, qj);
    row.m = proximity_m(curve, spec, surface, row.r, q).value;
    const auto n = counting_N(curve, spec.divisor, surface, row.r);
    row.N = n.value;
    row.boundary_zeros = n.boundary_zeros;
    row.residual = row.T - row.m - row.N;
    row.defect_ratio = row.T > 0.0 ? row.m / row.T : std::numeric_limits<double>::quiet_NaN();
    rep.rows[i] = row;
  });
  return rep;
}

struct DefectResult {
  double defect = 0.0;      ///< min of m/T over the top decade of r
  double alt_defect = 0.0;  ///< 1 - max of N/T over the top decade
  bool inconclusive = false;
  std::vector<double> ratio_trace;
};

/// delta_f(D) estimated as liminf m/T, read off the radii r >= r_max/10.
inline DefectResult defect_from(const NevReport& rep) {
  if (rep.rows.empty()) throw ConfigError("defect needs a non-empty report");
  DefectResult out;
  const double r_max = rep.rows.back().r;
  out.inconclusive = rep.rows.back().T < 10.0;
  out.defect = std::numeric_limits<double>::infinity();
  double max_nt = -std::numeric_limits<double>::infinity();
  for (const auto& row : rep.rows) {
    out.ratio_trace.push_back(row.defect_ratio);
    if (row.r < r_max / 10.0 || !(row.T > 0.0)) continue;
    out.defect = std::min(out.defect, row.m / row.T);
    max_nt = std::max(max_nt, row.N / row.T);
  }
  out.alt_defect = 1.0 - max_nt;
  return out;
}

inline DefectResult defect(const ProjectiveCurve& curve, const WeilSpec& spec, const SurfaceModel& surface,
                           const RGrid& grid, const QuadSettings& q = {}) {
  return defect_from(fmt_residual(curve, spec, surface, grid, q));
}

struct MeromT {
  double T_classic = 0.0;  ///< m(r, psi) + N(r, psi)
  double T_hat = 0.0;      ///< Fubini-Study characteristic of [den : num]
  double m = 0.0, N = 0.0;
  bool admissible = true;  ///< false for constant psi
};

/// m(r, psi) = mean log+ |psi| on the circle.
inline double merom_proximity(const MeromorphicFn& psi, double rho, const QuadSettings& q = {}) {
  auto lp = [&](cplx z) {
    const double v = detail::log_abs_or_inf(psi.numerator, z) - detail::log_abs_or_inf(psi.denominator, z);
    if (std::isnan(v)) return std::numeric_limits<double>::infinity();
    return std::max(0.0, v);
  };
  return detail::circle_mean(lp, rho, q.boundary_tol, q.boundary_min_nodes, q.boundary_max_nodes).value;
}

/// N(r, psi): poles counted through the zeros of the denominator.
inline double merom_counting(const MeromorphicFn& psi, double rho) {
  if (psi.denominator.is_constant()) return 0.0;
  if (psi.denominator.evaluate(0.0).vanishes(1e-14)) throw PoleError("psi has a pole at the origin");
  const auto zs = zeros_in_disc(psi.denominator, rho);
  double s = 0.0;
  for (const auto& a : zs.interior) s += a.multiplicity * std::log(rho / std::abs(a.z));
  return s;
}

/// Both characteristics; `with_hat = false` skips the area quadrature for T_hat.
inline MeromT merom_T(const MeromorphicFn& psi, const SurfaceModel& surface, double r, const QuadSettings& q = {},
                      bool with_hat = true) {
  const double rho = surface.euclidean_radius(r);
  MeromT out;
  out.m = merom_proximity(psi, rho, q);
  if (psi.is_constant()) {
    out.admissible = false;
    out.T_classic = out.m;
    return out;
  }
  out.N = merom_counting(psi, rho);
  out.T_classic = out.m + out.N;
  if (with_hat) out.T_hat = characteristic_T(ProjectiveCurve({psi.denominator, psi.numerator}), 1, surface, r, q);
  return out;
}

struct CroftonResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

/// Average of N_psi(r, zeta) over zeta drawn from the probability measure
/// proportional to dA / (|zeta|^2 (1 + log^2 |zeta|)): log|zeta| is standard
/// Cauchy and arg zeta is uniform.
inline CroftonResult crofton_T(const MeromorphicFn& psi, const SurfaceModel& surface, double r, int n_points,
                               std::uint64_t seed) {
  if (n_points < 100) throw ConfigError("crofton_T needs at least 100 sample points");
  if (psi.is_constant()) throw ConfigError("crofton_T needs a nonconstant function");
  const double rho = surface.euclidean_radius(r);
  std::vector<double> vals(n_points);
  parallel_for(static_cast<std::size_t>(n_points), [&](std::size_t i) {
    RngStream rng(seed, i);
    const double s = std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    const double th = quad::two_pi * rng.uniform();
    // |log zeta| is clamped at 700 to stay inside double range; the clamped
    // tail carries probability about 1e-3
    const double sc = std::clamp(s, -700.0, 700.0);
    const HoloExpr g = psi.numerator - HoloExpr::constant(std::polar(std::exp(sc), th)) * psi.denominator;
    double N = 0.0;
    if (!g.is_constant()) {
      const auto zs = zeros_in_disc(g, rho);
      for (const auto& a : zs.interior) {
        if (std::abs(a.z) == 0.0) throw NumericalError("Crofton sample hit psi(0)");
        N += a.multiplicity * std::log(rho / std::abs(a.z));
      }
    }
    vals[i] = N;
  });
  CroftonResult out;
  out.n = n_points;
  out.mean = pairwise_sum(vals) / n_points;
  std::vector<double> sq(n_points);
  for (int i = 0; i < n_points; ++i) sq[i] = (vals[i] - out.mean) * (vals[i] - out.mean);
  out.stderr_ = std::sqrt(pairwise_sum(sq) / (n_points - 1) / n_points);
  return out;
}

}  // namespace nevlab
