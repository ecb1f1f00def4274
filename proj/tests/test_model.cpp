#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace twoscale;
using twoscale::test::kInf;

namespace {

HypothesisReport white_noise_report(const ModelSpec& m) {
  return check_hypothesis_h1(*m.slow_basis, *m.fast_basis, 0.75, 0.75,
                             test::kInf, test::kInf);
}

}  // namespace

TEST_CASE("nemytskii pointwise application") {
  ModelSpec m = test::linear_model(4);
  auto gv = to_grid(unit_mode(m.fast_basis, 1), 8);
  auto gu = to_grid(zero_field(m.slow_basis), 8);

  SUBCASE("b1 = sigma2 returns the fast field") {
    auto out = nemytskii(m, CoeffKind::b1, gu, gv);
    CHECK((out.values - gv.values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("b2 vanishes at the origin") {
    auto z = to_grid(zero_field(m.fast_basis), 8);
    auto out = nemytskii(m, CoeffKind::b2, gu, z);
    CHECK(out.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("constant g2 gives the unit multiplier field") {
    auto out = nemytskii(m, CoeffKind::g2, gu, gv);
    CHECK((out.values.array() - 1.0).abs().maxCoeff() == 0.0);
  }
  SUBCASE("grid mismatch rejected") {
    auto coarse = to_grid(zero_field(m.fast_basis), 6);
    CHECK_THROWS_AS(nemytskii(m, CoeffKind::b1, gu, coarse),
                    std::invalid_argument);
  }
}

TEST_CASE("sampled coefficient checks") {
  SUBCASE("affine slope is recovered to rounding") {
    ModelSpec m = test::linear_model(4);
    auto r = check_hypothesis_h2(m, 500, 3);
    CHECK(r.measured_L_b2 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.measured_L_g2 == 0.0);
    CHECK(r.g2_growth_exponent == doctest::Approx(0.0));
    CHECK(r.pass());
    CHECK(r.violations.empty());
  }
  SUBCASE("too-steep b2 is flagged against the gap") {
    ModelSpec m = test::linear_model(4, {{"b2_sigma2", -2.0}});
    auto r = check_hypothesis_h2(m, 500, 3);
    CHECK(r.measured_L_b2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(r.lb2_lt_gap);
    CHECK_FALSE(r.pass());
    CHECK_FALSE(r.violations.empty());
  }
  SUBCASE("sample count below 100 rejected") {
    ModelSpec m = test::linear_model(4);
    CHECK_THROWS_AS(check_hypothesis_h2(m, 50, 3), std::invalid_argument);
  }
}

TEST_CASE("contraction constant") {
  ModelSpec m = test::linear_model(8);
  const HypothesisReport h1 = white_noise_report(m);

  SUBCASE("zero coefficients give zero") {
    ModelSpec z = m;
    z.L_b2 = 0.0;
    z.L_g2 = 0.0;
    auto r = check_condition_m0(z, h1);
    CHECK(r.m0 == 0.0);
    CHECK(r.pass);
  }
  SUBCASE("linear test model gives exactly 0.25") {
    auto r = check_condition_m0(m, h1);
    CHECK(r.m0 == 0.25);
    CHECK(r.pass);
    CHECK(r.drift_term == 0.25);
    CHECK(r.diffusion_term == 0.0);
  }
  SUBCASE("L_b2 = 0.8 variant fails at 0.64") {
    ModelSpec v = test::linear_model(8, {{"b2_sigma2", -0.8}});
    auto r = check_condition_m0(v, h1);
    CHECK(r.m0 == doctest::Approx(0.64).epsilon(1e-12));
    CHECK_FALSE(r.pass);
  }
  SUBCASE("monotone nondecreasing in both Lipschitz constants") {
    double prev_b = -1.0;
    for (double lb : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      ModelSpec v = m;
      v.L_b2 = lb;
      v.L_g2 = 0.3;
      const double m0 = check_condition_m0(v, h1).m0;
      CHECK(m0 >= prev_b);
      prev_b = m0;
    }
    double prev_g = -1.0;
    for (double lg : {0.0, 0.1, 0.2, 0.3, 0.4}) {
      ModelSpec v = m;
      v.L_b2 = 0.3;
      v.L_g2 = lg;
      const double m0 = check_condition_m0(v, h1).m0;
      CHECK(m0 >= prev_g);
      prev_g = m0;
    }
  }
  SUBCASE("rho = inf limit ignores kappa") {
    ModelSpec v = m;
    v.L_g2 = 0.5;
    HypothesisReport a = h1, b = h1;
    b.fast.kappa.partial_sum *= 100.0;
    CHECK(check_condition_m0(v, a).m0 == check_condition_m0(v, b).m0);
  }
  SUBCASE("missing constants rejected") {
    HypothesisReport broken = h1;
    broken.lambda_gap = 0.0;
    CHECK_THROWS_AS(check_condition_m0(m, broken), std::invalid_argument);
  }
}

TEST_CASE("model catalog") {
  auto sb = test::slow_pi(4);
  auto fb = test::fast_pi(4);

  SUBCASE("unknown model rejected") {
    CHECK_THROWS_AS(make_model("no_such_model", {}, sb, fb),
                    std::invalid_argument);
  }
  SUBCASE("unknown parameter rejected") {
    CHECK_THROWS_AS(make_model("linear_test_model", {{"fooo", 1.0}}, sb, fb),
                    std::invalid_argument);
  }
  SUBCASE("bistable reaction term") {
    ModelSpec m = make_model("bistable", {}, sb, fb);
    CHECK(m.b1(0.5, 1.5, 0.0) == doctest::Approx(1.5 - 1.5 * 1.5 * 1.5));
    CHECK(m.b1(0.5, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK(m.g1_depends_on_fast == false);
  }
  SUBCASE("additive_fast has fast-dependent bounded g1") {
    ModelSpec m = make_model("additive_fast", {}, sb, fb);
    CHECK(m.g1_depends_on_fast);
    CHECK(m.delta == doctest::Approx(1.0));
    CHECK(m.g1(0.0, 0.0, 0.0) == doctest::Approx(2.0));
    CHECK(m.g1(0.0, 0.0, std::numbers::pi / 2) == doctest::Approx(3.0));
    CHECK(m.g2(0.0, 5.0, -7.0) == 1.0);
    CHECK(m.analytic_bbar);
    CHECK_FALSE(m.analytic_gbar);
  }
  SUBCASE("linear analytic coefficients") {
    ModelSpec m = test::linear_model(4);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x[0] = 2.0;
    x[2] = -1.0;
    const Eigen::VectorXd b = m.analytic_bbar(x);
    CHECK(b[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(b[1] == 0.0);
    CHECK(b[2] == doctest::Approx(-1.0 / 19.0).epsilon(1e-14));
    const Eigen::MatrixXd g = m.analytic_gbar();
    CHECK((g - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
  }
}
