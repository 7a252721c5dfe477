#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "nevlab/surface.hpp"

using namespace nevlab;
using boost::math::quadrature::gauss_kronrod;

namespace {

const double pi = std::numbers::pi;

SurfaceModel plane() { return SurfaceModel(MetricProfile::euclidean()); }
SurfaceModel disc(double a = 1.0) { return SurfaceModel(MetricProfile::poincare(a)); }

// h = exp(rho^4 / 8): Delta log h = 2 rho^2, so K = -rho^2 exp(-rho^4 / 8).
MetricProfile quartic() {
  return MetricProfile::custom([](double r) { return std::exp(r * r * r * r / 8.0); },
                               std::numeric_limits<double>::infinity());
}

double quartic_K(double rho) { return -rho * rho * std::exp(-std::pow(rho, 4) / 8.0); }

}  // namespace

TEST(Curvature, FlatAndConstant) {
  EXPECT_EQ(curvature_at(MetricProfile::euclidean(), 0.5), 0.0);
  EXPECT_NEAR(curvature_at(MetricProfile::poincare(1.0), 0.3), -1.0, 1e-12);
  EXPECT_NEAR(curvature_at(MetricProfile::poincare(2.0), 0.3), -4.0, 1e-12);
}

TEST(Curvature, CustomMatchesFiniteDifferenceOracle) {
  const auto p = MetricProfile::custom([](double r) { return std::exp(r * r); },
                                       std::numeric_limits<double>::infinity());
  // independent oracle: five-point stencils for L = log h = rho^2
  auto L = [](double x) { return x * x; };
  const double rho = 0.7, s = 1e-3;
  const double d1 = (L(rho - 2 * s) - 8 * L(rho - s) + 8 * L(rho + s) - L(rho + 2 * s)) / (12 * s);
  const double d2 = (-L(rho - 2 * s) + 16 * L(rho - s) - 30 * L(rho) + 16 * L(rho + s) - L(rho + 2 * s)) / (12 * s * s);
  const double oracle = -(d2 + d1 / rho) / (2.0 * std::exp(rho * rho));
  EXPECT_NEAR(curvature_at(p, rho), oracle, 1e-6);
  EXPECT_NEAR(oracle, -2.0 * std::exp(-0.49), 1e-9);
}

TEST(Curvature, DomainViolationAndPositiveCurvature) {
  EXPECT_THROW(curvature_at(MetricProfile::poincare(1.0), 1.0), RangeError);
  EXPECT_THROW(curvature_at(MetricProfile::euclidean(), -0.1), RangeError);
  // the round sphere has K = +1
  EXPECT_THROW(MetricProfile::custom([](double r) { return 4.0 / std::pow(1.0 + r * r, 2); },
                                     std::numeric_limits<double>::infinity()),
               ConfigError);
  EXPECT_THROW(MetricProfile::poincare(0.0), ConfigError);
}

TEST(Kappa, Examples) {
  EXPECT_EQ(plane().kappa(7.0), 0.0);
  EXPECT_NEAR(disc().kappa(5.0), -1.0, 1e-12);
  EXPECT_THROW(plane().kappa(-1.0), RangeError);
}

TEST(Kappa, CustomMatchesGridMinimization) {
  const SurfaceModel s(quartic());
  const double r = s.geodesic_radius(0.5);
  double oracle = 0.0;
  for (int i = 0; i <= 100000; ++i) oracle = std::min(oracle, quartic_K(0.5 * i / 100000.0));
  EXPECT_NEAR(s.kappa(r), oracle, 1e-6);
  EXPECT_NEAR(oracle, -0.25 * std::exp(-1.0 / 128.0), 1e-9);
}

TEST(Kappa, NonPositiveAndNonIncreasing) {
  const SurfaceModel s(quartic());
  double prev = 0.0;
  for (double r = 0.05; r < 2.5; r += 0.05) {
    const double k = s.kappa(r);
    EXPECT_LE(k, 0.0);
    // once the minimum lies inside the disc, refinement noise is ~1e-9
    EXPECT_LE(k, prev + 1e-7) << "r=" << r;
    prev = k;
  }
}

TEST(Radius, Examples) {
  EXPECT_DOUBLE_EQ(plane().euclidean_radius(3.0), 3.0);
  EXPECT_NEAR(disc(1.0).euclidean_radius(2.0), 0.761594155955765, 1e-12);
  EXPECT_NEAR(disc(2.0).euclidean_radius(1.0), 0.761594155955765, 1e-12);
}

TEST(Radius, PoincareMatchesNumericIntegration) {
  // r(rho) = int_0^rho sqrt(h) integrated directly
  for (double a : {1.0, 2.0}) {
    const auto s = disc(a);
    for (double r : {0.3, 1.0, 2.0}) {
      const double rho = s.euclidean_radius(r);
      const double len = gauss_kronrod<double, 61>::integrate(
          [a](double t) { return 2.0 / (a * (1.0 - t * t)); }, 0.0, rho, 10, 1e-14);
      EXPECT_NEAR(len, r, 1e-10);
    }
  }
}

TEST(Radius, RoundTripOnLogGrid) {
  const SurfaceModel custom(quartic());
  for (const auto& s : {plane(), disc(1.0), disc(0.5), custom}) {
    for (int i = 0; i <= 30; ++i) {
      const double r = 0.01 * std::pow(1000.0, i / 30.0);
      if (s.profile().kind() == MetricKind::custom && r > 4.0) break;
      EXPECT_NEAR(s.geodesic_radius(s.euclidean_radius(r)), r, 1e-10 * std::max(1.0, r)) << "r=" << r;
    }
  }
}

TEST(Radius, StrictlyIncreasing) {
  const SurfaceModel s(quartic());
  double prev = 0.0;
  for (double r = 0.1; r < 4.0; r += 0.1) {
    const double rho = s.euclidean_radius(r);
    EXPECT_GT(rho, prev);
    prev = rho;
  }
}

TEST(Radius, FiniteRadialLength) {
  // flat unit disc: total radial length 1
  const SurfaceModel s(MetricProfile::custom([](double) { return 1.0; }, 1.0));
  EXPECT_NEAR(s.euclidean_radius(0.5), 0.5, 1e-12);
  EXPECT_THROW(s.euclidean_radius(2.0), RangeError);
  EXPECT_THROW(plane().euclidean_radius(-1.0), RangeError);
}

TEST(Radius, ConstantCurvatureClosedForms) {
  for (double a : {0.5, 1.0, 2.0}) {
    const auto s = disc(a);
    for (double r = 0.1; r <= 10.0; r += 0.1) {
      EXPECT_NEAR(s.euclidean_radius(r), std::tanh(a * r / 2.0), 1e-8);
      EXPECT_NEAR(curvature_at(s, s.euclidean_radius(r)), -a * a, 1e-8);
    }
  }
}

TEST(Green, Examples) {
  EXPECT_NEAR(green(plane(), std::numbers::e, 1.0), 1.0 / pi, 1e-15);
  EXPECT_NEAR(green(disc(), 2.0, 0.5), std::log(0.761594155955765 / 0.5) / pi, 1e-12);
  EXPECT_NEAR(green(disc(), 2.0, 0.5), 0.133947, 1e-6);
  for (const auto& s : {plane(), disc()}) EXPECT_EQ(green(s, 1.5, std::polar(s.euclidean_radius(1.5), 0.7)), 0.0);
}

TEST(Green, PoleAndRange) {
  EXPECT_THROW(green(plane(), 1.0, 0.0), PoleError);
  EXPECT_THROW(green(plane(), 1.0, 1.5), RangeError);
}

TEST(Green, DecreasingInModulus) {
  const auto s = disc();
  double prev = INFINITY;
  for (double t = 0.05; t < s.euclidean_radius(3.0); t += 0.05) {
    const double g = green(s, 3.0, std::polar(t, 1.0));
    EXPECT_LT(g, prev);
    EXPECT_GT(g, 0.0);
    prev = g;
  }
}

TEST(Green, NormalizationAgainstBump) {
  // int g_r (-1/2 Delta_S phi) dV = phi(o); Delta_S dV = Delta_euc dA.
  // phi = (1 - (rho/R)^2)^4 inside rho < R, radial and C^3.
  for (const auto& s : {plane(), disc()}) {
    const double r = 2.0, rho = s.euclidean_radius(r), R = 0.8 * rho;
    auto lap = [R](double t) {
      const double u = 1.0 - t * t / (R * R);
      const double d1 = 4.0 * std::pow(u, 3) * (-2.0 * t / (R * R));
      const double d2 = 12.0 * u * u * std::pow(2.0 * t / (R * R), 2) + 4.0 * std::pow(u, 3) * (-2.0 / (R * R));
      return d2 + d1 / t;
    };
    const double integral = gauss_kronrod<double, 61>::integrate(
        [&](double t) { return t == 0.0 ? 0.0 : green(s, r, t) * (-0.5 * lap(t)) * 2.0 * pi * t; }, 0.0, R, 15,
        1e-13);
    EXPECT_NEAR(integral, 1.0, 1e-6);
  }
}

TEST(HarmonicMeasure, UniformProbability) {
  EXPECT_DOUBLE_EQ(harmonic_measure_density(plane(), 1.0, 0.0), 1.0 / (2.0 * pi));
  EXPECT_DOUBLE_EQ(harmonic_measure_density(disc(), 3.0, pi), 1.0 / (2.0 * pi));
  const double total = gauss_kronrod<double, 15>::integrate(
      [](double th) { return harmonic_measure_density(disc(), 3.0, th); }, 0.0, 2.0 * pi);
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_THROW(harmonic_measure_density(plane(), 0.0, 0.0), RangeError);
}

TEST(Jacobi, ClosedForms) {
  const auto flat = jacobi_solve([](double) { return 0.0; }, 5.0);
  for (double t : {0.0, 0.5, 2.0, 5.0}) EXPECT_NEAR(flat.G(t), t, 1e-10);

  const auto hyp = jacobi_solve([](double) { return -1.0; }, 5.0);
  EXPECT_NEAR(hyp.G(1.0), 1.175201, 1e-6);
  for (double t = 0.0; t <= 5.0; t += 0.25) EXPECT_NEAR(hyp.G(t), std::sinh(t), 1e-8 * std::max(1.0, std::sinh(t)));

  const auto four = jacobi_solve([](double) { return -4.0; }, 2.0);
  EXPECT_NEAR(four.G(1.0), std::sinh(2.0) / 2.0, 1e-8);
  EXPECT_NEAR(four.G(1.0), 1.813430, 1e-6);
}

TEST(Jacobi, InvariantsHold) {
  const SurfaceModel s(quartic());
  for (auto kappa : {std::function<double(double)>([](double) { return 0.0; }),
                     std::function<double(double)>([](double) { return -1.0; }), kappa_function(s, 3.0)}) {
    const auto sol = jacobi_solve(kappa, 3.0);
    const auto inv = check_jacobi(sol);
    EXPECT_TRUE(inv.starts_correctly);
    EXPECT_TRUE(inv.increasing);
    EXPECT_TRUE(inv.above_identity);
    EXPECT_TRUE(inv.log_integral_bound);
    EXPECT_TRUE(inv.exponential_bound);
  }
}

TEST(Jacobi, InverseIntegralOfSinh) {
  const auto sol = jacobi_solve([](double) { return -1.0; }, 4.0);
  // int dt / sinh t = log tanh(t/2)
  const double exact = std::log(std::tanh(2.0)) - std::log(std::tanh(0.25));
  EXPECT_NEAR(sol.inverse_integral(0.5, 4.0), exact, 1e-8);
  EXPECT_THROW(sol.inverse_integral(0.0, 1.0), RangeError);
}

TEST(Jacobi, Errors) {
  EXPECT_THROW(jacobi_solve([](double) { return 0.0; }, 0.0), ConfigError);
  EXPECT_THROW(jacobi_solve([](double) { return 1.0; }, 1.0), ConfigError);
}

TEST(GreenLowerBound, EuclideanRatioIsConstant) {
  // with G = t the ratio is log(r / eta) / pi at every x
  const auto rep = green_lower_bound_check(plane(), 1.0, {10.0});
  EXPECT_TRUE(rep.bounded_away_from_zero);
  EXPECT_NEAR(rep.infimum[0], std::log(10.0) / pi, 1e-8);
  EXPECT_NEAR(rep.boundary_limit[0], std::log(10.0) / pi, 1e-5);
}

TEST(GreenLowerBound, PoincarePositive) {
  const auto rep = green_lower_bound_check(disc(), 1.0, {2.0, 3.0, 5.0});
  EXPECT_TRUE(rep.bounded_away_from_zero);
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    EXPECT_GT(rep.infimum[i], 0.0);
    EXPECT_TRUE(std::isfinite(rep.boundary_limit[i]));
  }
  EXPECT_THROW(green_lower_bound_check(disc(), 1.0, {0.5}), ConfigError);
  EXPECT_THROW(green_lower_bound_check(disc(), 1.0, {}), ConfigError);
}

TEST(CustomTable, TabulatedPoincareStaysNegative) {
  std::vector<std::pair<double, double>> table;
  for (int i = 0; i <= 18; ++i) {
    const double rho = 0.05 * i;
    table.push_back({rho, 4.0 / std::pow(1.0 - rho * rho, 2)});
  }
  const SurfaceModel s(MetricProfile::from_table(table));
  EXPECT_NEAR(s.geodesic_radius(0.5), 2.0 * std::atanh(0.5), 1e-4);
  for (double rho = 0.0; rho < 0.85; rho += 0.01) EXPECT_LE(curvature_at(s, rho), 0.0);
  EXPECT_THROW(MetricProfile::from_table({{0.1, 1.0}, {0.2, 1.0}, {0.3, 1.0}, {0.4, 1.0}}), ConfigError);
  EXPECT_THROW(MetricProfile::from_table({{0.0, 1.0}, {0.1, -1.0}, {0.2, 1.0}, {0.3, 1.0}}), ConfigError);
}
