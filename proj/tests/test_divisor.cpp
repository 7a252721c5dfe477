#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nevlab/divisor.hpp"

using namespace nevlab;

namespace {

HomogeneousPoly W(int n, int k) { return HomogeneousPoly::coordinate(n, k); }

HomogeneousPoly linear(int n, const std::vector<GaussRat>& a) {
  HomogeneousPoly L(n);
  for (int k = 0; k <= n; ++k) {
    if (a[k].is_zero()) continue;
    L = L.is_zero() ? HomogeneousPoly::coordinate(n, k, a[k]) : L + HomogeneousPoly::coordinate(n, k, a[k]);
  }
  return L;
}

ProjectivePoint point(std::vector<cplx> w) {
  double top = 0.0;
  for (auto x : w) top = std::max(top, std::abs(x));
  for (auto& x : w) x /= top;
  return {std::log(top), w};
}

WeilSpec spec(std::vector<DivisorComponent> comps, WeilNorm norm = WeilNorm::l2) {
  return {DivisorSum(std::move(comps)), norm};
}

}  // namespace

TEST(HomogeneousPoly, ArithmeticAndExactDivision) {
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  const auto p = w0 * w0 + GaussRat(3) * w1 * w2;
  EXPECT_EQ(p.degree(), 2);
  const auto q = w0 - GaussRat(Rational(1, 2), Rational(1)) * w2;
  const auto pq = p * q;
  ASSERT_TRUE(exact_divide(pq, q).has_value());
  EXPECT_TRUE(*exact_divide(pq, q) == p);
  EXPECT_FALSE(exact_divide(p, q).has_value());
  EXPECT_TRUE(pow(w0 + w1, 2) == w0 * w0 + GaussRat(2) * w0 * w1 + w1 * w1);
  EXPECT_THROW(w0 + W(1, 0), ConfigError);
  EXPECT_THROW(w0 + w0 * w1, ConfigError);
  const std::vector<cplx> at{{1.0, 1.0}, 2.0, {0.0, -1.0}};
  EXPECT_NEAR(std::abs(p.eval(at) - (at[0] * at[0] + 3.0 * at[1] * at[2])), 0.0, 1e-14);
}

TEST(OrdAlong, Examples) {
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  EXPECT_EQ(ord_along(w0 * w0 * w1, w0), 2);
  EXPECT_EQ(ord_along(pow(w0 + w1, 3) * w2, w0 + w1), 3);
  EXPECT_EQ(ord_along(w1 * w1, w0), 0);
  EXPECT_EQ(ord_along(pow(w0 * w1 - w2 * w2, 2) * w0, w0 * w1 - w2 * w2), 2);
  EXPECT_FALSE(ord_along(HomogeneousPoly(2), w0).has_value());
  EXPECT_THROW(ord_along(w0, HomogeneousPoly::constant(2, 1)), ConfigError);
}

TEST(OrdAlong, AdditiveOnProducts) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> coef(-3, 3);
  const int n = 2;
  auto random_linear = [&] {
    for (;;) {
      std::vector<GaussRat> a;
      for (int k = 0; k <= n; ++k) a.emplace_back(Rational(coef(gen)), Rational(coef(gen)));
      auto L = linear(n, a);
      if (!L.is_zero()) return L;
    }
  };
  for (int trial = 0; trial < 30; ++trial) {
    const auto E = random_linear();
    auto P = random_linear() * random_linear();
    auto Q = random_linear();
    const int a = trial % 3, b = (trial / 3) % 3;
    if (a > 0) P = P * pow(E, a);
    if (b > 0) Q = Q * pow(E, b);
    const auto oP = ord_along(P, E), oQ = ord_along(Q, E), oPQ = ord_along(P * Q, E);
    ASSERT_TRUE(oP && oQ && oPQ);
    EXPECT_EQ(*oPQ, *oP + *oQ);
    EXPECT_GE(*oP, a);
    EXPECT_GE(*oQ, b);
  }
}

TEST(ExactRank, SmallMatrices) {
  using R = std::vector<GaussRat>;
  EXPECT_EQ(exact_rank({R{1, 2}, R{2, 4}}), 1);
  EXPECT_EQ(exact_rank({R{1, 0}, R{0, GaussRat(0, 1)}}), 2);
  // rows (1, i) and (i, -1) are proportional over Q(i)
  EXPECT_EQ(exact_rank({R{1, GaussRat(0, 1)}, R{GaussRat(0, 1), -1}}), 1);
  EXPECT_EQ(exact_rank({}), 0);
}

TEST(GeneralPosition, Examples) {
  EXPECT_TRUE(general_position_check({W(1, 0), W(1, 1), W(1, 0) + W(1, 1)}, 1));
  EXPECT_TRUE(general_position_check({W(2, 0), W(2, 1), W(2, 2), W(2, 0) + W(2, 1) + W(2, 2)}, 2));
  EXPECT_FALSE(general_position_check({W(2, 0), W(2, 1), W(2, 0) + W(2, 1), W(2, 2)}, 2));
  EXPECT_FALSE(general_position_check({W(1, 0), GaussRat(2) * W(1, 0)}, 1));
  EXPECT_THROW(general_position_check({W(1, 0) * W(1, 1)}, 1), ConfigError);
}

TEST(Weil, CoordinateHyperplaneValues) {
  const auto D = spec({{W(1, 0), 1}}, WeilNorm::max);
  EXPECT_NEAR(weil(D, point({1.0, 1.0})), 0.0, 1e-15);
  EXPECT_NEAR(weil(D, point({1.0, std::exp(10.0)})), 10.0, 1e-12);
  const auto D2 = spec({{W(1, 0), 1}});
  EXPECT_NEAR(weil(D2, point({1.0, 1.0})), 0.5 * std::log(2.0), 1e-15);
  EXPECT_EQ(weil(D2, point({0.0, 1.0})), std::numeric_limits<double>::infinity());
}

TEST(Weil, MultiplicityScalesLinearly) {
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  const auto p = point({{0.3, 1.0}, -2.0, {0.5, 0.5}});
  const double one = weil(spec({{w0 + w1 - w2, 1}, {w0 * w2 - w1 * w1, 1}}), p);
  const double three = weil(spec({{w0 + w1 - w2, 3}, {w0 * w2 - w1 * w1, 3}}), p);
  EXPECT_NEAR(three, 3.0 * one, 1e-12);
}

TEST(Weil, InvariantUnderRescalingPointAndForm) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> N;
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  const auto Q = w0 * w1 + GaussRat(Rational(1, 3), Rational(-2)) * w2 * w2;
  for (auto norm : {WeilNorm::l2, WeilNorm::max}) {
    for (int t = 0; t < 20; ++t) {
      std::vector<cplx> w{{N(gen), N(gen)}, {N(gen), N(gen)}, {N(gen), N(gen)}};
      const cplx c(N(gen), N(gen));
      std::vector<cplx> cw = w;
      for (auto& x : cw) x *= 1e5 * c;
      const double base = weil(spec({{Q, 1}}, norm), point(w));
      EXPECT_NEAR(weil(spec({{Q, 1}}, norm), point(cw)), base, 1e-10);
      // a constant multiple of the form changes both |Q| and |Q(w)| by |c|
      EXPECT_NEAR(weil(spec({{GaussRat(Rational(7, 2), Rational(1)) * Q, 1}}, norm), point(w)), base, 1e-10);
    }
  }
}

TEST(Weil, L2NormOfLinearFormIsNonNegative) {
  // Cauchy-Schwarz: |L(w)| <= |L|_2 |w|_2
  std::mt19937_64 gen(8);
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> coef(-4, 4);
  for (int t = 0; t < 200; ++t) {
    std::vector<GaussRat> a;
    for (int k = 0; k <= 3; ++k) a.emplace_back(Rational(coef(gen)), Rational(coef(gen)));
    const auto L = linear(3, a);
    if (L.is_zero()) continue;
    std::vector<cplx> w;
    for (int k = 0; k <= 3; ++k) w.emplace_back(N(gen), N(gen));
    EXPECT_GE(weil(spec({{L, 1}}), point(w)), -1e-12);
  }
}

TEST(Irreducibility, FactorsOverGaussianRationals) {
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  const auto check_factor = [](const HomogeneousPoly& Q) {
    const auto res = irreducibility(Q);
    EXPECT_FALSE(res.irreducible) << Q.to_string();
    ASSERT_TRUE(res.linear_factor.has_value());
    EXPECT_TRUE(exact_divide(Q, *res.linear_factor).has_value());
  };
  check_factor(w0 * w0 - w1 * w1);
  // splits only over Q(i)
  check_factor(w0 * w0 + w1 * w1);
  check_factor((w0 + GaussRat(2) * w1) * (w0 * w0 + w1 * w2));
  check_factor(w0 * w1 * w2);
  EXPECT_TRUE(irreducibility(w0 * w2 - w1 * w1).irreducible);
  EXPECT_TRUE(irreducibility(pow(w0, 3) + pow(w1, 3) + pow(w2, 3)).irreducible);
  EXPECT_TRUE(irreducibility(w0 + w1).irreducible);
  EXPECT_THROW(irreducibility(HomogeneousPoly::constant(2, 5)), ConfigError);
}

TEST(DivisorSum, Validation) {
  const auto w0 = W(1, 0), w1 = W(1, 1);
  EXPECT_THROW(DivisorSum({{w0, 1}, {GaussRat(0, 3) * w0, 2}}), ConfigError);
  EXPECT_THROW(DivisorSum({{w0, 0}}), ConfigError);
  EXPECT_THROW(DivisorSum({{HomogeneousPoly::constant(1, 2), 1}}), ConfigError);
  EXPECT_THROW(DivisorSum({{w0, 1}, {W(2, 0), 1}}), ConfigError);
  EXPECT_THROW(DivisorSum(std::vector<DivisorComponent>{}), ConfigError);
  EXPECT_EQ(DivisorSum({{w0, 2}, {w0 * w0 - w1 * w1, 1}}).total_degree(), 4);
}

TEST(Compose, MatchesPointwiseEvaluation) {
  const HoloExpr Z = HoloExpr::z();
  const std::vector<HoloExpr> f{HoloExpr::constant(1.0), Z, HoloExpr::exp(Z)};
  const auto w0 = W(2, 0), w1 = W(2, 1), w2 = W(2, 2);
  const auto Q = w0 * w2 - GaussRat(0, 2) * w1 * w1 + w1 * w2;
  const HoloExpr g = compose(Q, f);
  for (cplx z : {cplx(0.3, -1.2), cplx(-2.0, 0.5), cplx(4.0, 4.0)}) {
    const std::vector<cplx> w{1.0, z, std::exp(z)};
    const cplx want = Q.eval(w);
    EXPECT_NEAR(std::abs(g(z).value() - want), 0.0, 1e-12 * std::max(1.0, std::abs(want)));
  }
  EXPECT_THROW(compose(Q, {f[0], f[1]}), ConfigError);
}
