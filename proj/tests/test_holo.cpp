#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "nevlab/holo.hpp"
#include "wronskian_suite.hpp"

using namespace nevlab;

namespace {

const HoloExpr Z = HoloExpr::z();
HoloExpr C(cplx c) { return HoloExpr::constant(c); }
HoloExpr E(const HoloExpr& q) { return HoloExpr::exp(q); }

cplx val(const HoloExpr& e, cplx z) { return e(z).value(); }

}  // namespace

TEST(HoloExpr, EvaluatesPolynomialsAndExponentials) {
  const HoloExpr f = C(2.0) * Z * Z + E(Z);
  const cplx z(0.3, -1.2);
  EXPECT_LT(std::abs(val(f, z) - (2.0 * z * z + std::exp(z))), 1e-14);
  EXPECT_TRUE(C(0.0).is_zero());
  EXPECT_TRUE(C(3.0).is_constant());
  EXPECT_FALSE(E(Z).is_polynomial());
}

TEST(HoloExpr, ScaledEvaluationDoesNotOverflow) {
  const auto v = E(Z)(1000.0);
  EXPECT_NEAR(v.log_abs(), 1000.0, 1e-12);
  const auto w = (E(C(2.0) * Z) + E(Z))(400.0);
  EXPECT_NEAR(w.log_abs(), 800.0, 1e-12);
}

TEST(HoloExpr, ExpNeedsPolynomialArgument) {
  EXPECT_THROW(E(E(Z)), ConfigError);
  EXPECT_NO_THROW(E(Z * Z + C(1.0)));
  // the constant of the argument becomes a coefficient
  EXPECT_LT(std::abs(val(E(Z + C(1.0)), 0.0) - std::numbers::e), 1e-14);
}

TEST(EvalProjective, Examples) {
  const ProjectiveCurve line({C(1.0), Z});
  auto p = eval_projective(line, 0.0);
  EXPECT_EQ(p.log_scale, 0.0);
  EXPECT_EQ(p.direction[0], cplx(1.0));
  EXPECT_EQ(p.direction[1], cplx(0.0));

  const ProjectiveCurve c3({C(1.0), E(Z), E(C(2.0) * Z)});
  p = eval_projective(c3, 100.0);
  EXPECT_NEAR(p.log_scale, 200.0, 1e-12);
  EXPECT_NEAR(std::log(std::abs(p.direction[0])), -200.0, 1e-10);
  EXPECT_NEAR(std::log(std::abs(p.direction[1])), -100.0, 1e-10);
  EXPECT_NEAR(std::abs(p.direction[2]), 1.0, 1e-15);

  const cplx z(3.0, 4.0);
  p = eval_projective(line, z);
  EXPECT_NEAR(p.log_scale, std::log(5.0), 1e-14);
  double top = 0.0;
  for (auto c : p.direction) top = std::max(top, std::abs(c));
  EXPECT_NEAR(top, 1.0, 1e-15);
  EXPECT_LT(std::abs(p.direction[0] * std::exp(p.log_scale) - 1.0), 1e-13);
  EXPECT_LT(std::abs(p.direction[1] * std::exp(p.log_scale) - z), 1e-13);
}

TEST(EvalProjective, NonReducedPointIsAnError) {
  const ProjectiveCurve c({Z, Z * Z});
  EXPECT_THROW(eval_projective(c, 0.0), NonReducedError);
  EXPECT_NO_THROW(eval_projective(c, 0.5));
  EXPECT_THROW(ProjectiveCurve({C(0.0), C(0.0)}), ConfigError);
  EXPECT_THROW(ProjectiveCurve({C(1.0)}), ConfigError);
}

TEST(Xderive, Examples) {
  const VectorField d;
  const cplx z(0.4, 0.9);
  EXPECT_LT(std::abs(val(xderive(Z * Z * Z, d, 1), z) - 3.0 * z * z), 1e-14);
  const HoloExpr g = E(Z * Z);
  EXPECT_LT(std::abs(val(xderive(g, d, 1), z) - 2.0 * z * std::exp(z * z)), 1e-13);
  EXPECT_LT(std::abs(val(xderive(g, d, 0), z) - val(g, z)), 1e-15);
  EXPECT_THROW(xderive(g, d, -1), ConfigError);
}

TEST(VectorField, MustBeNowhereZero) {
  EXPECT_THROW(VectorField{Z}, ConfigError);
  EXPECT_THROW((VectorField{Z, 1.0}), ConfigError);
  EXPECT_THROW(VectorField{C(1.0) + Z}, ConfigError);
  EXPECT_THROW(VectorField{C(0.0)}, ConfigError);
  EXPECT_NO_THROW(VectorField(Z - C(2.0), 1.0));
  EXPECT_NO_THROW(VectorField(C(3.0) * E(Z)));
  // a sum of exponentials cannot be certified nowhere zero
  EXPECT_THROW(VectorField(E(Z) + E(C(2.0) * Z)), ConfigError);
}

TEST(Xderive, FieldCoefficientMultiplies) {
  // X = e^z d/dz applied twice to z^2: e^z (e^z 2z)' = e^{2z} (2z + 2)
  const VectorField X(E(Z));
  const cplx z(-0.3, 0.7);
  EXPECT_LT(std::abs(val(xderive(Z * Z, X, 2), z) - std::exp(2.0 * z) * (2.0 * z + 2.0)), 1e-13);
}

TEST(Xderive, MeromorphicQuotientRule) {
  const VectorField d;
  const MeromorphicFn inv(C(1.0), Z);
  const auto dinv = xderive(inv, d, 1);
  const auto d2inv = xderive(inv, d, 2);
  const cplx z(1.3, -0.4);
  EXPECT_LT(std::abs(val(dinv.numerator, z) / val(dinv.denominator, z) + 1.0 / (z * z)), 1e-13);
  EXPECT_LT(std::abs(val(d2inv.numerator, z) / val(d2inv.denominator, z) - 2.0 / (z * z * z)), 1e-13);
}

TEST(Xderive, LeibnizRuleOnRandomProducts) {
  checks::RandomHolo rnd(7);
  for (int c = 0; c < 100; ++c) {
    const HoloExpr f = rnd.component(), g = rnd.component();
    const VectorField X(C(rnd.complex() + cplx(2.0)) * rnd.exp_factor());
    const cplx z = rnd.point(1.5);
    const cplx lhs = val(xderive(f * g, X, 1), z);
    const cplx rhs = val(xderive(f, X, 1) * g + f * xderive(g, X, 1), z);
    EXPECT_LE(checks::relative_error(lhs, rhs), 1e-10) << "case " << c;
  }
}

TEST(Wronskian, Examples) {
  const VectorField d;
  const HoloExpr w = wronskian({C(1.0), Z, Z * Z}, d);
  EXPECT_TRUE(w.is_constant());
  EXPECT_LT(std::abs(val(w, 0.7) - 2.0), 1e-14);

  // cofactor oracle for (1, e^z, e^{2z}): det [[1,a,b],[0,a,2b],[0,a,4b]] = 2ab
  const HoloExpr w3 = wronskian({C(1.0), E(Z), E(C(2.0) * Z)}, d);
  for (cplx z : {cplx(0.0), cplx(1.0, 2.0), cplx(-3.0, 0.5)})
    EXPECT_LE(checks::relative_error(val(w3, z), 2.0 * std::exp(3.0 * z)), 1e-13);

  // W(phi, phi z) = phi^2 W(1, z) with phi = e^z
  const HoloExpr phi = E(Z);
  const HoloExpr lhs = wronskian({phi, phi * Z}, d);
  const HoloExpr rhs = pow(phi, 2) * wronskian({C(1.0), Z}, d);
  for (cplx z : {cplx(0.2), cplx(-1.0, 1.0)}) EXPECT_LE(checks::relative_error(val(lhs, z), val(rhs, z)), 1e-13);
}

TEST(Wronskian, NumericValueMatchesSymbolic) {
  const VectorField d;
  const std::vector<HoloExpr> f{E(Z), Z * E(Z * Z), C(1.0) + Z * Z * Z};
  const HoloExpr w = wronskian(f, d);
  for (cplx z : {cplx(0.3, 0.1), cplx(-1.2, 0.8), cplx(2.0, -2.0)})
    EXPECT_LE(checks::relative_error(wronskian_value(f, d, z), w(z)), 1e-11);
}

TEST(LogWronskian, Examples) {
  const VectorField d;
  for (cplx z : {cplx(0.0), cplx(2.0, -1.0), cplx(-5.0, 3.0)})
    EXPECT_LT(std::abs(log_wronskian_eval({C(1.0), E(Z), E(C(2.0) * Z)}, d, z) - 2.0), 1e-12);

  const HoloExpr phi = E(Z * Z);
  checks::RandomHolo rnd(3);
  for (int c = 0; c < 10; ++c) {
    const cplx z = rnd.point(1.5);
    const auto f = rnd.family(2, z);
    const cplx a = log_wronskian_eval({phi * f[0], phi * f[1]}, d, z);
    const cplx b = log_wronskian_eval(f, d, z);
    EXPECT_LE(checks::relative_error(a, b), 1e-10);
  }

  EXPECT_LT(std::abs(log_wronskian_eval({C(1.0), Z}, d, 2.0) - 0.5), 1e-15);
  EXPECT_THROW(log_wronskian_eval({C(1.0), Z}, d, 0.0), SingularPointError);
}

TEST(Wronskian, FourIdentitiesOnRandomCases) {
  const auto res = checks::run_wronskian_suite(20240611, 100, 1e-9);
  for (const auto& s : res.identities) {
    EXPECT_EQ(s.cases, 100) << s.name;
    EXPECT_EQ(s.passed, s.cases) << s.name << ": worst relative error " << s.worst;
  }
  EXPECT_TRUE(res.all_passed());
}

TEST(Wronskian, VanishesExactlyOnDependentFamilies) {
  const VectorField d;
  struct Family {
    std::vector<HoloExpr> f;
    bool independent;
  };
  const std::vector<Family> families{
      {{C(1.0), Z, C(2.0) + C(3.0) * Z}, false},
      {{E(Z), E(C(2.0) * Z), E(Z) - C(0.5) * E(C(2.0) * Z)}, false},
      {{Z * E(Z), C(4.0) * Z * E(Z)}, false},
      {{E(Z), Z * E(Z), Z * Z * E(Z)}, true},
      {{C(1.0), E(Z), E(Z * Z)}, true},
      {{C(1.0), Z, Z * Z, Z * Z * Z}, true},
  };
  for (const auto& fam : families) {
    EXPECT_EQ(linearly_independent(fam.f), fam.independent);
    const cplx z(0.37, -0.61);
    ScaledComplex prod(1.0);
    for (std::size_t j = 0; j < fam.f.size(); ++j) prod *= xderive(fam.f[j], d, int(j))(z);
    const double rel = wronskian_value(fam.f, d, z).log_abs() - prod.log_abs();
    if (fam.independent)
      EXPECT_GT(rel, std::log(1e-6));
    else
      EXPECT_TRUE(wronskian_value(fam.f, d, z).is_zero() || rel < std::log(1e-12));
  }
}

TEST(FsDensity, LineHasUnitMass) {
  const ProjectiveCurve line({C(1.0), Z});
  EXPECT_NEAR(fs_density(line, 0.0), 1.0 / std::numbers::pi, 1e-15);
  // int_0^inf fs(t) 2 pi t dt with t = tan(u)
  using boost::math::quadrature::gauss_kronrod;
  const double mass = gauss_kronrod<double, 61>::integrate(
      [&](double u) {
        const double t = std::tan(u), c = std::cos(u);
        return fs_density(line, t) * 2.0 * std::numbers::pi * t / (c * c);
      },
      0.0, std::numbers::pi / 2.0 - 1e-9, 10, 1e-12);
  EXPECT_NEAR(mass, 1.0, 1e-8);
}

TEST(FsDensity, ConstantCurveIsZero) {
  const ProjectiveCurve c({C(1.0), C(5.0)});
  EXPECT_TRUE(c.is_constant());
  for (cplx z : {cplx(0.0), cplx(2.0, 1.0)}) EXPECT_EQ(fs_density(c, z), 0.0);
}

TEST(FsDensity, MatchesFiniteDifferenceLaplacian) {
  // fs = Delta_euc log ||f|| / (2 pi); fourth-order nine-point stencil
  auto check = [](const ProjectiveCurve& c, cplx z) {
    const double h = 1e-3;
    auto L = [&](double dx, double dy) { return log_norm(c, z + cplx(dx, dy)); };
    const double lap = (-(L(2 * h, 0) + L(-2 * h, 0) + L(0, 2 * h) + L(0, -2 * h)) +
                        16.0 * (L(h, 0) + L(-h, 0) + L(0, h) + L(0, -h)) - 60.0 * L(0, 0)) /
                       (12.0 * h * h);
    return std::abs(fs_density(c, z) - lap / (2.0 * std::numbers::pi));
  };
  const ProjectiveCurve sq({C(1.0), Z * Z});
  const cplx on_circle = std::polar(1.0, 0.4);
  EXPECT_LT(check(sq, on_circle), 1e-6);
  const double t2 = std::norm(on_circle);
  EXPECT_NEAR(fs_density(sq, on_circle), 4.0 * t2 / (std::numbers::pi * std::pow(1.0 + t2 * t2, 2)), 1e-14);

  checks::RandomHolo rnd(11);
  const ProjectiveCurve c3({C(1.0), E(Z), E(C(2.0) * Z)});
  const ProjectiveCurve mixed({Z + C(1.0), E(Z * Z), C(2.0) * Z * Z});
  for (int i = 0; i < 20; ++i) {
    const cplx z = rnd.point(2.0);
    EXPECT_LT(check(c3, z), 1e-6) << z;
    EXPECT_LT(check(mixed, z), 1e-6) << z;
  }
}
