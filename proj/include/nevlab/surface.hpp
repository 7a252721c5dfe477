#pragma once

// Radially symmetric conformal surfaces of non-positive curvature.
//
// A surface is the plane or the unit disc with metric  ds^2 = h(|z|) |dz|^2.
// With this convention the Laplace-Beltrami operator is (1/h) Delta_euc, the
// volume form is h dA, and the Gauss curvature is
//
//     K = -(1/(2h)) Delta_euc log h.
//
// The Green function of Delta_S / 2 on the geodesic disc of radius r about the
// origin is (1/pi) log(rho_e(r)/|z|) for every such metric, and the harmonic
// measure seen from the origin is d(theta)/(2 pi).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

// pchip.hpp in some Boost releases calls isnan unqualified on double
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "nevlab/error.hpp"
#include "nevlab/scaled.hpp"

namespace nevlab {

enum class MetricKind { euclidean, poincare, custom };

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::poincare: return "poincare";
    case MetricKind::custom: return "custom";
  }
  return "?";
}

/// Metric density h(rho_e) over the Euclidean coordinate radius.
class MetricProfile {
 public:
  using Density = std::function<double(double)>;

  static MetricProfile euclidean() {
    MetricProfile p(MetricKind::euclidean, [](double) { return 1.0; },
                    std::numeric_limits<double>::infinity());
    return p;
  }

  /// Constant curvature -a^2 on the unit disc.
  static MetricProfile poincare(double a) {
    if (!(a > 0.0)) throw ConfigError("poincare profile needs a > 0");
    MetricProfile p(MetricKind::poincare,
                    [a](double rho) {
                      const double s = 1.0 - rho * rho;
                      return 4.0 / (a * a * s * s);
                    },
                    1.0);
    p.a_ = a;
    return p;
  }

  /// Arbitrary smooth positive density; curvature is obtained by central
  /// differences of log h. Fails if K > 0 anywhere on the check grid.
  static MetricProfile custom(Density h, double domain_radius) {
    MetricProfile p(MetricKind::custom, std::move(h), domain_radius);
    p.check_curvature();
    return p;
  }

  /// Density given as (rho_e, h) samples. log h is interpolated by a
  /// monotone cubic, which keeps h positive and follows the exponential-type
  /// growth of negatively curved profiles far better than interpolating h.
  /// The samples must start at rho_e = 0; the last sample bounds the domain.
  static MetricProfile from_table(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 4) throw ConfigError("custom profile table needs at least 4 samples");
    std::sort(samples.begin(), samples.end());
    if (samples.front().first != 0.0) throw ConfigError("custom profile table must start at rho_e = 0");
    std::vector<double> xs, ys;
    for (auto [x, y] : samples) {
      if (!(y > 0.0)) throw ConfigError("custom profile density must be positive");
      if (!xs.empty() && x <= xs.back()) throw ConfigError("custom profile radii must be distinct");
      xs.push_back(x);
      ys.push_back(std::log(y));
    }
    const double edge = xs.back();
    // A smooth radial density is even in rho_e, so (log h)'(0) = 0. At the
    // far end the slope of the quadratic through the last three samples
    // replaces the library's cruder one-sided estimate.
    const std::size_t m = xs.size();
    const double x0 = xs[m - 3], x1 = xs[m - 2], x2 = xs[m - 1];
    const double right_slope = ys[m - 3] * (x2 - x1) / ((x0 - x1) * (x0 - x2)) +
                               ys[m - 2] * (x2 - x0) / ((x1 - x0) * (x1 - x2)) +
                               ys[m - 1] * (2.0 * x2 - x0 - x1) / ((x2 - x0) * (x2 - x1));
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(xs), std::move(ys), 0.0, right_slope);
    MetricProfile p(MetricKind::custom, [spline](double rho) { return std::exp((*spline)(rho)); }, edge);
    p.table_ = std::move(samples);
    p.check_curvature();
    return p;
  }

  MetricKind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double domain_radius() const noexcept { return domain_radius_; }
  bool is_plane() const noexcept { return std::isinf(domain_radius_); }
  const std::vector<std::pair<double, double>>& table() const noexcept { return table_; }

  double density(double rho) const {
    check_domain(rho);
    const double v = h_(rho);
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericalError("metric density not positive at rho_e=" + std::to_string(rho));
    return v;
  }

  void check_domain(double rho) const {
    if (!(rho >= 0.0) || !(rho < domain_radius_))
      throw RangeError("rho_e=" + std::to_string(rho) + " outside [0, " + std::to_string(domain_radius_) + ")");
  }

 private:
  MetricProfile(MetricKind k, Density h, double R) : kind_(k), h_(std::move(h)), domain_radius_(R) {}
  void check_curvature() const;

  MetricKind kind_;
  Density h_;
  double domain_radius_;
  double a_ = 0.0;
  std::vector<std::pair<double, double>> table_;

  friend double curvature_at(const MetricProfile&, double);
};

/// Gauss curvature K(rho_e) = -(L'' + L'/rho) / (2h) with L = log h.
inline double curvature_at(const MetricProfile& p, double rho) {
  p.check_domain(rho);
  switch (p.kind()) {
    case MetricKind::euclidean: return 0.0;
    case MetricKind::poincare: return -p.a() * p.a();
    case MetricKind::custom: break;
  }
  const double h0 = p.density(rho);
  auto L = [&](double x) { return std::log(p.density(std::abs(x))); };
  double step = 1e-4 * std::max(1.0, rho);
  if (std::isfinite(p.domain_radius())) step = std::min(step, 0.25 * (p.domain_radius() - rho));
  if (!(step > 1e-9)) throw NumericalError("curvature step underflow near the domain edge");
  // L is even in rho, so differences across 0 are legitimate.
  const double lm = L(rho - step), l0 = L(rho), lp = L(rho + step);
  const double d2 = (lp - 2.0 * l0 + lm) / (step * step);
  double lap;
  if (rho < 10.0 * step) {
    lap = 2.0 * d2;  // L'/rho -> L''(0)
  } else {
    const double d1 = (lp - lm) / (2.0 * step);
    lap = d2 + d1 / rho;
  }
  const double K = -lap / (2.0 * h0);
  if (!std::isfinite(K)) throw NumericalError("custom profile curvature is not finite at rho_e=" + std::to_string(rho));
  return K;
}

inline void MetricProfile::check_curvature() const {
  // plane profiles are checked on rho_e <= 20, or up to where h overflows
  const double edge = std::isinf(domain_radius_) ? 20.0 : domain_radius_ * (1.0 - 1e-3);
  const int n = 512;
  for (int i = 0; i < n; ++i) {
    const double rho = edge * double(i) / double(n);
    if (is_plane() && !std::isfinite(h_(rho * (1.0 + 1e-3) + 1e-3))) break;
    const double K = curvature_at(*this, rho);
    // tolerance covers finite-difference noise of an otherwise flat metric
    if (K > 1e-6 * std::max(1.0, std::abs(K)))
      throw ConfigError("metric has positive curvature " + std::to_string(K) + " at rho_e=" + std::to_string(rho));
  }
}

/// The surface S with reference point o = 0.
class SurfaceModel {
 public:
  explicit SurfaceModel(MetricProfile p) : profile_(std::move(p)) {}

  const MetricProfile& profile() const noexcept { return profile_; }
  bool is_plane() const noexcept { return profile_.is_plane(); }

  /// Geodesic radius of the Euclidean circle |z| = rho_e.
  double geodesic_radius(double rho) const {
    profile_.check_domain(rho);
    switch (profile_.kind()) {
      case MetricKind::euclidean: return rho;
      case MetricKind::poincare: return (2.0 / profile_.a()) * std::atanh(rho);
      case MetricKind::custom: break;
    }
    if (rho == 0.0) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate([&](double s) { return std::sqrt(profile_.density(s)); }, 0.0, rho,
                                                 15, 1e-13);
  }

  /// Euclidean radius rho_e of the geodesic circle of radius r about o.
  double euclidean_radius(double r) const {
    if (!(r >= 0.0)) throw RangeError("geodesic radius must be non-negative");
    switch (profile_.kind()) {
      case MetricKind::euclidean: return r;
      case MetricKind::poincare: {
        const double rho = std::tanh(0.5 * profile_.a() * r);
        if (!(rho < 1.0)) throw RangeError("geodesic radius " + std::to_string(r) + " not representable on the disc");
        return rho;
      }
      case MetricKind::custom: break;
    }
    if (r == 0.0) return 0.0;
    const double edge = profile_.domain_radius();
    double hi;
    if (std::isinf(edge)) {
      hi = 1.0;
      while (geodesic_radius(hi) < r) {
        hi *= 2.0;
        if (hi > 1e12) throw RangeError("geodesic radius unreachable");
      }
    } else {
      hi = edge * (1.0 - 1e-12);
      if (geodesic_radius(hi) < r)
        throw RangeError("geodesic radius " + std::to_string(r) + " exceeds the radial length of the disc");
    }
    boost::uintmax_t iters = 200;
    auto [lo_b, hi_b] = boost::math::tools::toms748_solve([&](double rho) { return geodesic_radius(rho) - r; }, 0.0, hi,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo_b + hi_b);
  }

  /// kappa(r) = min of K over the closed geodesic disc of radius r.
  double kappa(double r) const {
    if (!(r >= 0.0)) throw RangeError("kappa needs r >= 0");
    switch (profile_.kind()) {
      case MetricKind::euclidean: euclidean_radius(r); return 0.0;
      case MetricKind::poincare: euclidean_radius(r); return -profile_.a() * profile_.a();
      case MetricKind::custom: break;
    }
    const double R = euclidean_radius(r);
    const int n = 2048;
    int best = 0;
    double best_k = curvature_at(profile_, 0.0);
    for (int i = 1; i <= n; ++i) {
      const double k = curvature_at(profile_, R * double(i) / double(n));
      if (k < best_k) {
        best_k = k;
        best = i;
      }
    }
    const double lo = R * double(std::max(best - 1, 0)) / n;
    const double hi = R * double(std::min(best + 1, n)) / n;
    if (hi > lo) {
      auto [x, k] = boost::math::tools::brent_find_minima([&](double rho) { return curvature_at(profile_, rho); }, lo,
                                                          hi, 40);
      best_k = std::min(best_k, k);
    }
    return std::min(best_k, 0.0);
  }

 private:
  MetricProfile profile_;
};

inline double curvature_at(const SurfaceModel& s, double rho) { return curvature_at(s.profile(), rho); }

/// Green function of Delta_S/2 on D(r) with pole at o, evaluated at z.
inline double green(const SurfaceModel& s, double r, cplx z) {
  const double R = s.euclidean_radius(r);
  const double a = std::abs(z);
  if (a == 0.0) throw PoleError("green function evaluated at its pole");
  if (a > R * (1.0 + 1e-12)) throw RangeError("point outside the geodesic disc");
  return std::max(0.0, std::log(R / a) / std::numbers::pi);
}

/// Density of the harmonic measure of D(r) seen from o, per unit angle.
inline double harmonic_measure_density(const SurfaceModel& s, double r, double /*theta*/) {
  if (!(r > 0.0)) throw RangeError("harmonic measure needs r > 0");
  s.euclidean_radius(r);
  return 1.0 / (2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Jacobi comparison function  G'' + kappa G = 0,  G(0) = 0, G'(0) = 1.

class JacobiSolution {
 public:
  JacobiSolution(std::vector<double> t, std::vector<double> G, std::vector<double> Gp, std::vector<double> K,
                 std::function<double(double)> kappa)
      : t_(std::move(t)), G_(std::move(G)), Gp_(std::move(Gp)), K_(std::move(K)), kappa_(std::move(kappa)) {}

  const std::vector<double>& grid() const noexcept { return t_; }
  const std::vector<double>& G_values() const noexcept { return G_; }
  const std::vector<double>& G_prime_values() const noexcept { return Gp_; }
  double r_max() const noexcept { return t_.back(); }
  double kappa_floor(double t) const { return kappa_(t); }

  /// Cubic Hermite interpolation of G.
  double G(double t) const {
    auto [i, s, h] = locate(t);
    return hermite(G_[i], G_[i + 1], Gp_[i], Gp_[i + 1], s, h);
  }

  /// int_a^b dt / G(t) for 0 < a <= b <= r_max.
  double inverse_integral(double a, double b) const {
    if (!(a > 0.0) || a > b) throw RangeError("inverse_integral needs 0 < a <= b");
    return std::log(b / a) + K(b) - K(a);
  }

 private:
  // K(t) = int_0^t (1/G - 1/s) ds, regular at 0.
  double K(double t) const {
    auto [i, s, h] = locate(t);
    auto dK = [&](std::size_t j) {
      const double tj = t_[j];
      return tj < 1e-8 ? 0.0 : 1.0 / G_[j] - 1.0 / tj;
    };
    return hermite(K_[i], K_[i + 1], dK(i), dK(i + 1), s, h);
  }

  std::tuple<std::size_t, double, double> locate(double t) const {
    if (t < 0.0 || t > t_.back() * (1.0 + 1e-12)) throw RangeError("t outside the solved range");
    const double h = t_[1] - t_[0];
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t / h), t_.size() - 2);
    return {i, (t - t_[i]) / h, h};
  }

  static double hermite(double y0, double y1, double d0, double d1, double s, double h) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
  }

  std::vector<double> t_, G_, Gp_, K_;
  std::function<double(double)> kappa_;
};

/// Solves the Jacobi equation on [0, r_max] with an adaptive Dormand-Prince
/// 4/5 stepper (local error <= tol) and samples it on a uniform grid.
inline JacobiSolution jacobi_solve(std::function<double(double)> kappa_floor, double r_max, double tol = 1e-10,
                                   std::size_t samples = 4001) {
  namespace odeint = boost::numeric::odeint;
  if (!(r_max > 0.0)) throw ConfigError("jacobi_solve needs r_max > 0");
  using State = std::array<double, 3>;  // G, G', int (1/G - 1/t)
  auto rhs = [&](const State& y, State& dy, double t) {
    const double k = kappa_floor(t);
    if (k > 0.0) throw ConfigError("kappa floor must be non-positive");
    dy[0] = y[1];
    dy[1] = -k * y[0];
    dy[2] = t < 1e-6 ? -k * t / 6.0 : 1.0 / y[0] - 1.0 / t;  // series near 0
  };
  std::vector<double> times(samples);
  for (std::size_t i = 0; i < samples; ++i) times[i] = r_max * double(i) / double(samples - 1);
  std::vector<double> t, G, Gp, K;
  t.reserve(samples);
  State y{0.0, 1.0, 0.0};
  auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  try {
    odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), r_max / double(samples - 1),
                            [&](const State& s, double tt) {
                              t.push_back(tt);
                              G.push_back(s[0]);
                              Gp.push_back(s[1]);
                              K.push_back(s[2]);
                            },
                            odeint::max_step_checker(100000));
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("Jacobi solver step underflow: ") + e.what());
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("Jacobi solver step underflow: ") + e.what());
  }
  if (t.size() != samples) throw NumericalError("Jacobi solver stopped early at t=" + std::to_string(t.back()));
  for (double g : G)
    if (!std::isfinite(g)) throw NumericalError("Jacobi solution overflowed");
  return JacobiSolution(std::move(t), std::move(G), std::move(Gp), std::move(K), std::move(kappa_floor));
}

/// kappa(t) of a surface in a form cheap enough for ODE right-hand sides.
inline std::function<double(double)> kappa_function(const SurfaceModel& s, double r_max) {
  switch (s.profile().kind()) {
    case MetricKind::euclidean: return [](double) { return 0.0; };
    case MetricKind::poincare: {
      const double k = -s.profile().a() * s.profile().a();
      return [k](double) { return k; };
    }
    case MetricKind::custom: break;
  }
  // tabulated running minimum, linearly interpolated; stays non-increasing
  const int n = 256;
  auto table = std::make_shared<std::vector<double>>(n + 1);
  for (int i = 0; i <= n; ++i) (*table)[i] = s.kappa(r_max * double(i) / n);
  for (int i = 1; i <= n; ++i) (*table)[i] = std::min((*table)[i], (*table)[i - 1]);
  return [table, r_max, n](double t) {
    const double x = std::clamp(t / r_max, 0.0, 1.0) * n;
    const int i = std::min(static_cast<int>(x), n - 1);
    const double w = x - i;
    return (1.0 - w) * (*table)[i] + w * (*table)[i + 1];
  };
}

struct JacobiInvariants {
  bool starts_correctly = true;   ///< G(0) = 0, G'(0) = 1
  bool increasing = true;
  bool above_identity = true;     ///< G(t) >= t
  bool log_integral_bound = true; ///< int_1^r dt/G <= log r
  bool exponential_bound = true;  ///< G(r) <= r exp(r sqrt(-kappa(r)))
  bool all() const {
    return starts_correctly && increasing && above_identity && log_integral_bound && exponential_bound;
  }
};

inline JacobiInvariants check_jacobi(const JacobiSolution& sol, double tol = 1e-8) {
  JacobiInvariants out;
  const auto& t = sol.grid();
  const auto& G = sol.G_values();
  out.starts_correctly = std::abs(G[0]) <= tol && std::abs(sol.G_prime_values()[0] - 1.0) <= tol;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && !(G[i] > G[i - 1])) out.increasing = false;
    if (G[i] < t[i] * (1.0 - tol) - tol) out.above_identity = false;
    const double k = sol.kappa_floor(t[i]);
    if (G[i] > t[i] * std::exp(t[i] * std::sqrt(-k)) * (1.0 + tol) + tol) out.exponential_bound = false;
    if (t[i] >= 1.0 && sol.inverse_integral(1.0, t[i]) > std::log(t[i]) + tol) out.log_integral_bound = false;
  }
  return out;
}

struct GreenLowerBoundReport {
  double eta = 0.0;
  std::vector<double> radii;
  std::vector<double> infimum;     ///< per r: inf over sampled x of the ratio
  std::vector<double> boundary_limit; ///< per r: ratio as r(x) -> r
  double overall_infimum = 0.0;
  bool bounded_away_from_zero = false;
};

/// Empirical infimum of g_r(o,x) int_eta^r dt/G / int_{r(x)}^r dt/G over
/// sampled x with eta < r(x) < r, for each r in `radii`.
inline GreenLowerBoundReport green_lower_bound_check(const SurfaceModel& s, double eta, std::vector<double> radii,
                                                     int samples = 64) {
  if (!(eta > 0.0) || radii.empty() || samples < 2) throw ConfigError("degenerate green lower-bound grid");
  for (double r : radii)
    if (!(r > eta)) throw ConfigError("green lower bound needs r > eta");
  const double r_max = *std::max_element(radii.begin(), radii.end());
  const auto sol = jacobi_solve(kappa_function(s, r_max), r_max);
  GreenLowerBoundReport rep;
  rep.eta = eta;
  rep.radii = radii;
  rep.overall_infimum = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    const double R = s.euclidean_radius(r);
    const double outer = sol.inverse_integral(eta, r);
    double inf = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= samples; ++j) {
      // geodesic radii clustered toward the boundary, where both sides vanish
      const double u = double(j) / double(samples + 1);
      const double rx = eta + (r - eta) * (1.0 - (1.0 - u) * (1.0 - u));
      const double g = std::log(R / s.euclidean_radius(rx)) / std::numbers::pi;
      const double inner = sol.inverse_integral(rx, r);
      if (inner > 0.0) inf = std::min(inf, g * outer / inner);
    }
    // l'Hopital at the boundary: (1/pi) (d/dr log rho_e) * G(r) * outer
    const double dr = 1e-6 * r;
    const double dlog = (std::log(s.euclidean_radius(r)) - std::log(s.euclidean_radius(r - dr))) / dr;
    rep.boundary_limit.push_back(dlog * sol.G(r) * outer / std::numbers::pi);
    rep.infimum.push_back(inf);
    rep.overall_infimum = std::min(rep.overall_infimum, inf);
  }
  rep.bounded_away_from_zero = std::isfinite(rep.overall_infimum) && rep.overall_infimum > 1e-12;
  return rep;
}

}  // namespace nevlab
