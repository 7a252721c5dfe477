#pragma once

// Brownian motion on a radial surface as time-changed planar Brownian
// motion, and Monte Carlo estimators built on it.
//
// A planar path Z_s started at 0 runs until it leaves |z| < rho_e(r). Surface
// time is the additive functional int h(Z_s) ds, so the occupation integral
// E int_0^tau phi(X_t) dt equals E int phi(Z_s) h(Z_s) ds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "nevlab/divisor.hpp"
#include "nevlab/error.hpp"
#include "nevlab/holo.hpp"
#include "nevlab/nevanlinna.hpp"
#include "nevlab/parallel.hpp"
#include "nevlab/quadrature.hpp"
#include "nevlab/rng.hpp"
#include "nevlab/surface.hpp"

namespace nevlab {

struct PathPolicy {
  double base_step = 1e-2;       ///< largest Euclidean time step
  double shrink = 0.05;          ///< step <= shrink * (distance to boundary)^2
  double floor_step = 1e-6;      ///< smallest step
  std::uint64_t max_steps = 10'000'000;
  std::uint64_t seed = 20240607;
  bool antithetic = false;       ///< path 2k+1 starts from the mirrored stream of path 2k
  std::size_t n_paths = 100000;
  std::size_t batches = 100;     ///< batch count for batch-means standard errors

  void validate() const {
    if (!(base_step > 0.0) || !(shrink > 0.0) || !(floor_step > 0.0) || floor_step > base_step)
      throw ConfigError("path policy needs 0 < floor_step <= base_step and shrink > 0");
    if (max_steps == 0 || n_paths == 0) throw ConfigError("path policy needs positive step cap and path count");
    if (batches < 2 || batches > n_paths) throw ConfigError("path policy needs 2 <= batches <= n_paths");
  }
};

/// Real-valued function on the surface in the conformal coordinate.
using SurfaceFn = std::function<double(cplx)>;

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct PathBatch {
  std::size_t n_paths = 0;
  std::size_t abandoned = 0;
  std::vector<double> exit_angle;    ///< arg Z at exit, per path
  std::vector<double> surface_time;  ///< int h(Z_s) ds, per path
  std::vector<std::vector<double>> functionals;  ///< [k][path] int phi_k(Z_s) h(Z_s) ds
  std::vector<Estimate> estimates;   ///< per functional, over kept paths
  Estimate time;                     ///< surface exit time
  double bias_bound = 0.0;           ///< heuristic discretization bias for the time estimate
};

namespace detail {

/// Mean and batch-means standard error of the values with keep[i] set.
/// Batches are contiguous index ranges, so the result does not depend on
/// how paths were scheduled.
inline Estimate batch_means(const std::vector<double>& v, const std::vector<char>& keep, std::size_t batches) {
  std::vector<double> kept;
  kept.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep[i]) kept.push_back(v[i]);
  Estimate e;
  if (kept.empty()) return e;
  e.mean = pairwise_sum(kept) / double(kept.size());
  batches = std::min(batches, kept.size());
  if (batches < 2) return e;
  std::vector<double> bm(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = kept.size() * b / batches, hi = kept.size() * (b + 1) / batches;
    bm[b] = pairwise_sum(std::span<const double>(kept.data() + lo, hi - lo)) / double(hi - lo);
  }
  std::vector<double> sq(batches);
  for (std::size_t b = 0; b < batches; ++b) sq[b] = (bm[b] - e.mean) * (bm[b] - e.mean);
  e.stderr_ = std::sqrt(pairwise_sum(sq) / double(batches - 1) / double(batches));
  return e;
}

}  // namespace detail

/// Simulates n_paths planar paths from 0 to the circle |z| = rho_e(r) and
/// accumulates int phi_k(Z) h(Z) ds for every functional by the trapezoid
/// rule. The step is min(base, max(floor, shrink * d^2)) with d the distance
/// to the circle; exit between two nodes is detected with the Brownian-bridge
/// crossing probability exp(-2 d_0 d_1 / ds) of the tangent half-plane.
inline PathBatch simulate_paths(const SurfaceModel& surface, double r, const std::vector<SurfaceFn>& phis,
                                const PathPolicy& policy) {
  policy.validate();
  if (!(r > 0.0)) throw RangeError("simulate_paths needs r > 0");
  const double rho = surface.euclidean_radius(r);
  const auto& prof = surface.profile();
  const bool flat = prof.kind() == MetricKind::euclidean;
  auto h_at = [&](cplx z) { return flat ? 1.0 : prof.density(std::min(std::abs(z), rho)); };

  const std::size_t n = policy.n_paths, K = phis.size();
  PathBatch out;
  out.n_paths = n;
  out.exit_angle.assign(n, 0.0);
  out.surface_time.assign(n, 0.0);
  out.functionals.assign(K, std::vector<double>(n, 0.0));
  std::vector<char> keep(n, 1);

  parallel_for(n, [&](std::size_t i) {
    const std::size_t stream = policy.antithetic ? i / 2 : i;
    const double sign = policy.antithetic && (i % 2) ? -1.0 : 1.0;
    RngStream rng(policy.seed, stream);
    cplx z{0.0, 0.0};
    double h0 = h_at(z);
    std::vector<double> f0(K), acc(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) f0[k] = phis[k](z) * h0;
    double t = 0.0;
    std::uint64_t steps = 0;
    while (true) {
      if (++steps > policy.max_steps) {
        keep[i] = 0;
        return;
      }
      const double d0 = rho - std::abs(z);
      const double ds = std::min(policy.base_step, std::max(policy.floor_step, policy.shrink * d0 * d0));
      const double sq = std::sqrt(ds);
      const double gx = rng.normal(), gy = rng.normal();
      const cplx z1 = z + sign * sq * cplx(gx, gy);
      const double d1 = rho - std::abs(z1);
      bool exited = d1 <= 0.0;
      if (!exited && d0 * d1 < 4.0 * ds) exited = rng.uniform() < std::exp(-2.0 * d0 * d1 / ds);
      if (exited) {
        // half a step at the last interior node covers the crossing interval
        t += 0.5 * ds * h0;
        for (std::size_t k = 0; k < K; ++k) acc[k] += 0.5 * ds * f0[k];
        out.exit_angle[i] = std::arg(z1);
        break;
      }
      const double h1 = h_at(z1);
      t += 0.5 * ds * (h0 + h1);
      for (std::size_t k = 0; k < K; ++k) {
        const double f1 = phis[k](z1) * h1;
        acc[k] += 0.5 * ds * (f0[k] + f1);
        f0[k] = f1;
      }
      z = z1;
      h0 = h1;
    }
    out.surface_time[i] = t;
    for (std::size_t k = 0; k < K; ++k) out.functionals[k][i] = acc[k];
  });

  for (char c : keep) out.abandoned += c ? 0 : 1;
  if (out.abandoned * 100 > n)
    throw NumericalError(std::to_string(out.abandoned) + " of " + std::to_string(n) +
                         " paths exceeded the step cap; estimates would be biased");
  out.time = detail::batch_means(out.surface_time, keep, policy.batches);
  for (std::size_t k = 0; k < K; ++k) out.estimates.push_back(detail::batch_means(out.functionals[k], keep, policy.batches));
  // overshoot of order sqrt(floor) in radius, turned into surface time near the circle
  out.bias_bound = 2.0 * rho * std::sqrt(policy.floor_step) * h_at(std::polar(rho, 0.0)) +
                   policy.base_step * out.time.mean;
  return out;
}

/// Harmonic measure from the centre is uniform: the exit angle is sampled
/// exactly.
inline double sample_exit_angle(const SurfaceModel& surface, double r, RngStream& rng) {
  if (!(r > 0.0)) throw RangeError("sample_exit_angle needs r > 0");
  (void)surface.euclidean_radius(r);
  return 2.0 * std::numbers::pi * rng.uniform();
}

/// E[psi(X_tau)] from exactly sampled exit angles, one stream per sample.
inline Estimate harmonic_expectation(const SurfaceModel& surface, double r, const SurfaceFn& psi,
                                     const PathPolicy& policy) {
  policy.validate();
  const double rho = surface.euclidean_radius(r);
  std::vector<double> v(policy.n_paths);
  parallel_for(policy.n_paths, [&](std::size_t i) {
    RngStream rng(policy.seed ^ 0x5bd1e995ull, i);
    v[i] = psi(std::polar(rho, sample_exit_angle(surface, r, rng)));
  });
  return detail::batch_means(v, std::vector<char>(v.size(), 1), policy.batches);
}

struct OccupationResult {
  Estimate estimate;
  std::size_t abandoned = 0;
  double bias_bound = 0.0;
};

/// E_o int_0^tau phi(X_t) dt.
inline OccupationResult occupation_estimate(const SurfaceModel& surface, const SurfaceFn& phi, double r,
                                            const PathPolicy& policy) {
  const auto b = simulate_paths(surface, r, {phi}, policy);
  return {b.estimates[0], b.abandoned, b.bias_bound};
}

/// int_D g_r(o, z) phi(z) dV by quadrature, with g_r = log(rho/|z|)/pi.
inline double green_integral(const SurfaceModel& surface, const SurfaceFn& phi, double r, double tol = 1e-10) {
  const double rho = surface.euclidean_radius(r);
  auto ring = [&](double t) {
    const double h = surface.profile().density(t);
    const auto m = quad::periodic_mean([&](double th) { return phi(std::polar(t, th)); }, 1e-11, 64);
    return 2.0 * t * m.value * h;  // (1/pi) * 2 pi t * mean * h
  };
  return quad::log_weighted_radial(ring, rho, tol);
}

struct ExitTimeReport {
  Estimate estimate;
  double bound = 0.0;   ///< r^2 / 2
  double margin = 0.0;  ///< bound - mean
  double bias_bound = 0.0;
};

inline ExitTimeReport exit_time_estimate(const SurfaceModel& surface, double r, const PathPolicy& policy) {
  const auto b = simulate_paths(surface, r, {}, policy);
  ExitTimeReport out;
  out.estimate = b.time;
  out.bound = 0.5 * r * r;
  out.margin = out.bound - out.estimate.mean;
  out.bias_bound = b.bias_bound;
  return out;
}

/// Delta_S u = (1/h) Delta_euc u by the five-point stencil.
inline SurfaceFn surface_laplacian(const SurfaceModel& surface, SurfaceFn u, double step = 1e-4) {
  return [&surface, u = std::move(u), step](cplx z) {
    const double lap = (u(z + step) + u(z - step) + u(z + cplx(0.0, step)) + u(z - cplx(0.0, step)) - 4.0 * u(z)) /
                       (step * step);
    return lap / surface.profile().density(std::abs(z));
  };
}

struct DynkinReport {
  Estimate boundary;  ///< E u(X_tau)
  Estimate interior;  ///< E int_0^tau Delta_S u(X_t) dt
  double u0 = 0.0;
  double residual = 0.0;  ///< E u(X_tau) - u(o) - interior / 2
  double stderr_ = 0.0;   ///< combined
};

/// Dynkin's formula E u(X_tau) - u(o) = (1/2) E int_0^tau Delta_S u(X_t) dt.
inline DynkinReport dynkin_residual(const SurfaceModel& surface, const SurfaceFn& u, const SurfaceFn& lap_u, double r,
                                    const PathPolicy& policy) {
  DynkinReport out;
  out.boundary = harmonic_expectation(surface, r, u, policy);
  out.interior = occupation_estimate(surface, lap_u, r, policy).estimate;
  out.u0 = u(0.0);
  out.residual = out.boundary.mean - out.u0 - 0.5 * out.interior.mean;
  out.stderr_ = std::sqrt(out.boundary.stderr_ * out.boundary.stderr_ + 0.25 * out.interior.stderr_ * out.interior.stderr_);
  return out;
}

struct McNevanlinna {
  Estimate T;
  Estimate m;
  std::string N_flag = "N is computed by the quadrature engine";
};

/// T by the co-area formula, T = d pi E int_0^tau (fs/h)(X_t) dt, and m by
/// exact exit sampling of the Weil function.
inline McNevanlinna mc_nevanlinna(const ProjectiveCurve& curve, const WeilSpec& spec, const SurfaceModel& surface,
                                  double r, const PathPolicy& policy) {
  if (!std::isfinite(weil(spec, eval_projective(curve, 0.0)))) throw ConfigError("f(o) lies on Supp D");
  const int d = spec.divisor.total_degree();
  McNevanlinna out;
  SurfaceFn fs_over_h = [&](cplx z) { return fs_density(curve, z) / surface.profile().density(std::abs(z)); };
  const auto occ = occupation_estimate(surface, fs_over_h, r, policy).estimate;
  out.T = {d * std::numbers::pi * occ.mean, d * std::numbers::pi * occ.stderr_};
  out.m = harmonic_expectation(surface, r, [&](cplx z) { return weil(spec, eval_projective(curve, z)); }, policy);
  return out;
}

}  // namespace nevlab
