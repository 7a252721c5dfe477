#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nevlab/smt.hpp"

using namespace nevlab;

namespace {

const HoloExpr Z = HoloExpr::z();
const HoloExpr ONE = HoloExpr::constant(1.0);
HoloExpr C(cplx c) { return HoloExpr::constant(c); }
HomogeneousPoly W(int n, int k) { return HomogeneousPoly::coordinate(n, k); }

const SurfaceModel& plane() {
  static const SurfaceModel s(MetricProfile::euclidean());
  return s;
}
const SurfaceModel& disc() {
  static const SurfaceModel s(MetricProfile::poincare(1.0));
  return s;
}

void expect_consistent(const InequalityTrace& tr) {
  for (const auto& row : tr.rows) {
    EXPECT_NEAR(row.margin, row.rhs - row.lhs, 1e-12 * std::max(1.0, std::abs(row.rhs))) << tr.name << " " << row.r;
    EXPECT_EQ(row.flagged, !row.reason.empty()) << tr.name << " " << row.r;
  }
}

}  // namespace

TEST(LogDerivative, ClosedFormProximities) {
  const VectorField X;
  // (e^{2z})' / e^{2z} = 2
  EXPECT_NEAR(log_derivative_m(MeromorphicFn(HoloExpr::exp(C(2.0) * Z)), X, 1, plane(), 3.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(log_derivative_m(MeromorphicFn(HoloExpr::exp(Z)), X, 3, plane(), 3.0), 0.0, 1e-12);
  // z'/z = 1/z: log+ (1/rho)
  EXPECT_NEAR(log_derivative_m(MeromorphicFn(Z), X, 1, plane(), 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(log_derivative_m(MeromorphicFn(Z), X, 1, plane(), 4.0), 0.0, 1e-12);
  // (e^{z^2})'' / e^{z^2} = 4 z^2 + 2, and |4z^2 + 2| >= 2 for |z| >= 1, so
  // Jensen gives log(4 rho^2)
  for (double r : {1.0, 2.5, 7.0})
    EXPECT_NEAR(log_derivative_m(MeromorphicFn(HoloExpr::exp(Z * Z)), X, 2, plane(), r), std::log(4.0 * r * r), 1e-8)
        << r;
  EXPECT_THROW(log_derivative_m(MeromorphicFn(C(2.0)), X, 1, plane(), 1.0), ConfigError);
  EXPECT_THROW(log_derivative(MeromorphicFn(Z), X, 0), ConfigError);
}

TEST(LogDerivative, ReportHoldsForEntireAndMeromorphicFunctions) {
  const VectorField X;
  const auto grid = RGrid::log_spaced(2.0, 30.0, 10);
  for (const auto& psi : {MeromorphicFn(HoloExpr::exp(Z)), MeromorphicFn(HoloExpr::exp(Z) + Z, Z - C(1.5)),
                          MeromorphicFn(Z * Z * Z - C(2.0))}) {
    const auto tr = ldl_report(psi, X, 2, plane(), grid);
    expect_consistent(tr);
    EXPECT_TRUE(tr.all_ok());
    EXPECT_EQ(tr.rows.size(), grid.radii.size());
  }
}

TEST(LogDerivative, CurvatureTermOnTheDisc) {
  const auto tr = ldl_report(MeromorphicFn(HoloExpr::exp(Z)), VectorField(), 1, disc(), RGrid::linear(0.5, 4.0, 8));
  expect_consistent(tr);
  for (const auto& row : tr.rows) EXPECT_NEAR(row.curvature, row.r * row.r, 1e-6) << row.r;
}

TEST(DerivativeGrowth, ExponentialAndPolynomial) {
  const VectorField X;
  const auto grid = RGrid::log_spaced(2.0, 30.0, 8);
  const auto tr = derivative_growth_check(MeromorphicFn(HoloExpr::exp(Z)), X, 2, plane(), grid);
  expect_consistent(tr);
  EXPECT_TRUE(tr.all_ok());
  // T(r, 4 e^z) = rho / pi + log 4 up to the log+ cut, far below 4 T
  for (const auto& row : tr.rows) EXPECT_LT(row.lhs, row.main);
  EXPECT_TRUE(derivative_growth_check(MeromorphicFn(Z * Z), X, 1, plane(), grid).all_ok());
  EXPECT_THROW(derivative_growth_check(MeromorphicFn(Z), X, 0, plane(), grid), ConfigError);
}

TEST(CalculusLemma, ConstantAndRadialFunctions) {
  const auto grid = RGrid::linear(0.5, 6.0, 12);
  const auto tr = calculus_lemma_report(plane(), [](cplx) { return 1.0; }, grid);
  expect_consistent(tr);
  for (const auto& row : tr.rows) {
    EXPECT_NEAR(row.lhs, 1.0, 1e-12);
    if (row.r <= 1.0) {
      EXPECT_EQ(row.reason, "the lemma is stated for r > 1");
    }
    if (row.r > 1.0 && row.flagged) {
      EXPECT_NE(row.reason.find("Borel"), std::string::npos) << row.reason;
    }
  }
  EXPECT_TRUE(tr.all_ok());
  // occupation integral of 1 is r^2 / 2
  for (const auto& row : tr.rows) EXPECT_NEAR(row.extra.at(0).second, 0.5 * row.r * row.r, 1e-8);
  const auto sq = calculus_lemma_report(disc(), [](cplx z) { return std::norm(z); }, RGrid::linear(1.5, 5.0, 6));
  EXPECT_TRUE(sq.all_ok());
  EXPECT_THROW(calculus_lemma_report(plane(), [](cplx) { return -1.0; }, grid), ConfigError);
}

TEST(Borel, ExceptionalCellsAtJumps) {
  std::vector<double> r, lt;
  for (int i = 0; i <= 100; ++i) {
    r.push_back(1.0 + 0.1 * i);
    // slow growth, then a jump of 5 in log T across [6, 6.1]: the secant 50
    // beats (log T)^2 = 42.25 there
    lt.push_back(1.0 + 0.01 * i + (i > 50 ? 5.0 : 0.0));
  }
  const auto rep = borel_exceptional_log(r, lt, 1.0);
  EXPECT_DOUBLE_EQ(rep.c_phi, 1.0);
  ASSERT_EQ(rep.intervals.size(), 1u);
  EXPECT_NEAR(rep.intervals[0].lo, 6.0, 1e-12);
  EXPECT_NEAR(rep.intervals[0].hi, 6.1, 1e-12);
  EXPECT_NEAR(rep.measure, 0.1, 1e-12);
  EXPECT_LE(rep.measure, rep.c_phi + rep.resolution);
  EXPECT_TRUE(rep.contains(6.05));
  EXPECT_FALSE(rep.contains(7.0));
  EXPECT_EQ(rep.gamma, 1.0);
}

TEST(Borel, SlowGrowthHasNoExceptions) {
  std::vector<double> r, T;
  for (int i = 0; i < 200; ++i) {
    r.push_back(2.0 + 0.25 * i);
    T.push_back(std::exp(1.0) * r.back() * r.back());
  }
  const auto rep = borel_exceptional(r, T, 0.5);
  EXPECT_TRUE(rep.intervals.empty());
  EXPECT_DOUBLE_EQ(rep.c_phi, 2.0);
  EXPECT_NEAR(rep.resolution, 0.25, 1e-12);
}

TEST(Borel, GammaSkipsSmallT) {
  // T < e before r = 3: cells there are never flagged
  const std::vector<double> r{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> lt{0.0, 0.9, 5.0, 5.1};
  const auto rep = borel_exceptional_log(r, lt, 1.0);
  EXPECT_EQ(rep.gamma, 3.0);
  EXPECT_TRUE(rep.intervals.empty());
}

TEST(Borel, RejectsBadInput) {
  EXPECT_THROW(borel_exceptional({1.0, 2.0}, {1.0, 2.0}, 0.0), ConfigError);
  EXPECT_THROW(borel_exceptional({1.0}, {1.0}, 1.0), DataError);
  EXPECT_THROW(borel_exceptional({1.0, 2.0}, {2.0, 1.0}, 1.0), DataError);
  EXPECT_THROW(borel_exceptional({2.0, 1.0}, {1.0, 2.0}, 1.0), DataError);
  EXPECT_THROW(borel_exceptional({1.0, 2.0}, {0.0, 2.0}, 1.0), DataError);
}

TEST(MaxSumWeil, BasisHyperplanesGiveThePlainSum) {
  // n+1 independent hyperplanes: the only maximal subset is all of them
  const ProjectiveCurve f({ONE, HoloExpr::exp(Z), Z + C(2.0)});
  const std::vector<HomogeneousPoly> H{W(2, 0) + W(2, 1), W(2, 1) - W(2, 2), W(2, 0) + W(2, 2) + W(2, 1)};
  for (double r : {1.0, 3.0}) {
    double sum = 0.0;
    for (const auto& h : H) sum += proximity_m(f, {DivisorSum({{h, 1}})}, plane(), r).value;
    EXPECT_NEAR(max_sum_weil_boundary(f, H, plane(), r), sum, 1e-9) << r;
  }
}

TEST(MaxSumWeil, MaxNormScansEverySubset) {
  const ProjectiveCurve f({ONE, HoloExpr::exp(Z)});
  const std::vector<HomogeneousPoly> H{W(1, 0), W(1, 1), W(1, 0) + W(1, 1)};
  // with the max norm lambda_{w0} + lambda_{w1} = log+ |e^z| + log+ |e^{-z}| = |Re z|,
  // whose circle mean is 2 rho / pi; the maximum over pairs can only add to it
  const double v = max_sum_weil_boundary(f, H, plane(), 5.0, WeilNorm::max);
  EXPECT_GE(v, 2.0 * 5.0 / std::numbers::pi - 1e-9);
  EXPECT_THROW(max_sum_weil_boundary(f, {W(1, 0), W(1, 0) * W(1, 1)}, plane(), 1.0), ConfigError);
}

TEST(Cartan, ThreePointsOnTheLine) {
  const ProjectiveCurve f({ONE, HoloExpr::exp(Z)});
  const std::vector<HomogeneousPoly> H{W(1, 0), W(1, 1), W(1, 0) + W(1, 1)};
  const auto tr = cartan_smt_report(f, H, plane(), RGrid::log_spaced(2.0, 40.0, 8));
  expect_consistent(tr);
  EXPECT_TRUE(tr.all_ok());
  for (const auto& row : tr.rows) EXPECT_NEAR(row.main, 2.0 * row.T, 1e-12);
  EXPECT_THROW(cartan_smt_report(f, {W(1, 0), GaussRat(2) * W(1, 0)}, plane(), RGrid::linear(1.0, 2.0, 2)),
               ConfigError);
  // [1 : 1 + z : 2 + 2z] is linearly degenerate
  const ProjectiveCurve deg({ONE, ONE + Z, C(2.0) + C(2.0) * Z});
  EXPECT_THROW(cartan_smt_report(deg, {W(2, 0), W(2, 1), W(2, 2)}, plane(), RGrid::linear(1.0, 2.0, 2)), ConfigError);
}

TEST(LogWronskian, ExponentialPair) {
  // H_k f = e^{-z}, e^{z}: rows (1, 1) and (-1, 1), determinant 2
  const ProjectiveCurve f({HoloExpr::exp(C(-1.0) * Z), HoloExpr::exp(Z)});
  const auto res = log_wronskian_proximity(f, {W(1, 0), W(1, 1)}, VectorField(), plane(), 3.0);
  EXPECT_NEAR(res.m, std::log(2.0), 1e-12);
  EXPECT_GT(res.reference, 0.0);
  // [1 : e^z] gives determinant 1
  const ProjectiveCurve g({ONE, HoloExpr::exp(Z)});
  EXPECT_NEAR(log_wronskian_proximity(g, {W(1, 0), W(1, 1)}, VectorField(), plane(), 3.0).m, 0.0, 1e-12);
  EXPECT_THROW(log_wronskian_proximity(g, {W(1, 0)}, VectorField(), plane(), 3.0), ConfigError);
}
