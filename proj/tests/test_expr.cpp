#include <gtest/gtest.h>

#include <cmath>

#include "nevlab/expr.hpp"

using namespace nevlab;
using namespace nevlab::expr;

namespace {

// evaluates psi at z, or NaN at a pole
cplx at(const MeromorphicFn& psi, cplx z) { return psi.numerator(z).value() / psi.denominator(z).value(); }

std::size_t error_position(std::string_view src, bool projective = false) {
  try {
    if (projective)
      (void)parse_homogeneous(src, 2);
    else
      (void)parse_meromorphic(src);
  } catch (const ParseError& e) {
    return e.position();
  }
  ADD_FAILURE() << "no error for '" << src << "'";
  return std::string::npos;
}

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
  const cplx z(0.7, -0.3);
  const auto near = [&](std::string_view src, cplx want) {
    EXPECT_NEAR(std::abs(at(parse_meromorphic(src), z) - want), 0.0, 1e-13 * std::max(1.0, std::abs(want))) << src;
  };
  near("1 + 2 * z", 1.0 + 2.0 * z);
  near("(1 + 2) * z", 3.0 * z);
  near("z - 1 - 2", z - 3.0);
  near("8 / 2 / z", 4.0 / z);
  near("-z^2", -(z * z));
  near("(-z)^2", z * z);
  near("2 * -z", -2.0 * z);
  near("+z", z);
  near("i * z", cplx(0.0, 1.0) * z);
  near("exp(2*z) - exp(z)^2 + 1", 1.0);
  near("1.5e1 * z + 2.5E-1", 15.0 * z + 0.25);
  near("z^0", 1.0);
  near("(z + 1) / (z - 2)", (z + 1.0) / (z - 2.0));
  near("exp(z) / (z^2 + 1) + 1 / z", std::exp(z) / (z * z + 1.0) + 1.0 / z);
}

TEST(Expr, EntireExpressions) {
  const HoloExpr h = parse_holo("exp(z^2 - i*z) * (z + 3) / 2");
  const cplx z(-0.4, 1.1);
  EXPECT_NEAR(std::abs(h(z).value() - std::exp(z * z - cplx(0.0, 1.0) * z) * (z + 3.0) / 2.0), 0.0, 1e-12);
  EXPECT_THROW(parse_holo("1 / z"), ParseError);
  // a quotient that reduces to a constant denominator is entire
  EXPECT_NO_THROW(parse_holo("z / 4"));
}

TEST(Expr, HomogeneousPolynomialsAreExact) {
  const auto p = parse_homogeneous("0.25*w0^2 - w1*w2/3 + i*w0*w2", 2);
  const auto w0 = HomogeneousPoly::coordinate(2, 0), w1 = HomogeneousPoly::coordinate(2, 1),
             w2 = HomogeneousPoly::coordinate(2, 2);
  const auto want = GaussRat(Rational(1, 4)) * w0 * w0 - GaussRat(Rational(1, 3)) * w1 * w2 +
                    GaussRat(Rational(0), Rational(1)) * w0 * w2;
  EXPECT_TRUE(p == want) << p.to_string();
  const auto sum = HomogeneousPoly::coordinate(1, 0) + HomogeneousPoly::coordinate(1, 1);
  EXPECT_TRUE(parse_homogeneous("(w0 + w1)^3", 1) == pow(sum, 3));
  // 1e-3 is exactly 1/1000, not its double approximation
  const auto q = parse_homogeneous("1e-3 * w0", 1);
  EXPECT_EQ(q.terms().begin()->second.re, Rational(1, 1000));
  EXPECT_EQ(literal_rational("12.50e2", 0), Rational(1250));
  EXPECT_EQ(literal_rational(".5", 0), Rational(1, 2));
  EXPECT_EQ(literal_rational("0.0125", 0), Rational(1, 80));
  EXPECT_EQ(literal_rational("007", 0), Rational(7));
  EXPECT_EQ(literal_rational("0.0", 0), Rational(0));
}

TEST(Expr, MaxVariable) {
  EXPECT_EQ(max_variable(*parse("w0*w3 + w1^2")), 3);
  EXPECT_EQ(max_variable(*parse("z + 1")), -1);
}

TEST(Expr, ErrorPositions) {
  EXPECT_EQ(error_position(""), 0u);
  EXPECT_EQ(error_position("   "), 3u);
  EXPECT_EQ(error_position("z + "), 4u);
  EXPECT_EQ(error_position("z + )"), 4u);
  EXPECT_EQ(error_position("(z + 1"), 6u);
  EXPECT_EQ(error_position("2 * foo(z)"), 4u);
  EXPECT_EQ(error_position("z ^ -1"), 4u);
  EXPECT_EQ(error_position("z^2^3"), 3u);
  EXPECT_EQ(error_position("exp z"), 4u);
  EXPECT_EQ(error_position("1 / 0"), 2u);
  EXPECT_EQ(error_position("exp(1/z)"), 0u);
  EXPECT_EQ(error_position("z # 1"), 2u);
  EXPECT_EQ(error_position("w1 + z"), 0u);
  EXPECT_EQ(error_position("."), 0u);
}

TEST(Expr, ProjectiveErrorPositions) {
  EXPECT_EQ(error_position("w0 + w3", true), 5u);
  EXPECT_EQ(error_position("w0 * z", true), 5u);
  EXPECT_EQ(error_position("exp(w0)", true), 0u);
  EXPECT_EQ(error_position("w0 / w1", true), 3u);
  // whole-polynomial errors point at the top-level operator
  EXPECT_EQ(error_position("w0^2 + w1", true), 5u);
  EXPECT_EQ(error_position("w0 - w0", true), 3u);
  EXPECT_EQ(error_position("w12345", true), 0u);
}

TEST(Expr, ErrorMessagesCarryPosition) {
  try {
    (void)parse_meromorphic("z + bar");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown identifier 'bar' at position 4"), std::string::npos) << e.what();
  }
}
