#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "twoscale/io_util.hpp"

using namespace twoscale;

namespace {

ErgodicParams quick_params(double T = 40.0, int replicas = 8) {
  ErgodicParams p;
  p.T = T;
  p.Tb = 5.0;
  p.dt = 1e-3;
  p.replicas = replicas;
  p.jobs = 2;
  return p;
}

ConditionM0Report passed_gate(const ModelSpec& m) {
  const HypothesisReport h1 = check_hypothesis_h1(
      *m.slow_basis, *m.fast_basis, 0.75, 0.75, test::kInf, test::kInf);
  return check_condition_m0(m, h1);
}

}  // namespace

TEST_CASE("ergodic average of a constant is exact with zero spread") {
  ModelSpec m = test::linear_model(4);
  auto stats = ergodic_average(
      m, zero_field(m.slow_basis), zero_field(m.fast_basis),
      [](const Eigen::VectorXd&) { return 2.5; }, quick_params(5.0, 4),
      test::key_of(1));
  CHECK(stats.estimate == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(stats.se < 1e-14);
  CHECK(stats.replicas == 4);
}

TEST_CASE("ergodic average recovers the stationary second moment") {
  ModelSpec m = test::linear_model(4);
  auto stats = ergodic_average(
      m, zero_field(m.slow_basis), zero_field(m.fast_basis),
      [](const Eigen::VectorXd& v) { return v[0] * v[0]; }, quick_params(60.0),
      test::key_of(2));
  CHECK(std::abs(stats.estimate - 1.0 / 3.0) < 3 * stats.se);
}

TEST_CASE("nonfinite functional values abort") {
  ModelSpec m = test::linear_model(2);
  CHECK_THROWS_WITH_AS(
      ergodic_average(
          m, zero_field(m.slow_basis), zero_field(m.fast_basis),
          [](const Eigen::VectorXd&) {
            return std::numeric_limits<double>::quiet_NaN();
          },
          quick_params(1.0, 1), test::key_of(3)),
      doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("invariant measure moments") {
  SUBCASE("p = 2 matches the mode-variance sum at N = 4") {
    ModelSpec m = test::linear_model(4);
    auto stats = invariant_moments(m, zero_field(m.slow_basis), 2,
                                   quick_params(80.0), test::key_of(4));
    double target = 0.0;
    for (int k = 1; k <= 4; ++k) target += 1.0 / (2.0 * k * k + 1.0);
    CHECK(target == doctest::Approx(0.5274).epsilon(1e-3));
    CHECK(std::abs(stats.estimate - target) < 3 * stats.se);
  }
  SUBCASE("zero-noise contracting model sits at the origin") {
    ModelSpec m = test::linear_model(4, {{"b2_sigma1", 0.0}, {"g2_const", 0.0}});
    auto stats = invariant_moments(m, zero_field(m.slow_basis), 2,
                                   quick_params(5.0, 2), test::key_of(5));
    CHECK(stats.estimate == 0.0);
    CHECK(stats.se == 0.0);
  }
  SUBCASE("estimate is nondecreasing in the mode count") {
    double prev = -1.0;
    for (int n : {2, 4, 8}) {
      ModelSpec m = test::linear_model(n);
      auto stats = invariant_moments(m, zero_field(m.slow_basis), 2,
                                     quick_params(150.0), test::key_of(6));
      CHECK(stats.estimate > prev);
      prev = stats.estimate;
    }
  }
  SUBCASE("only even p in {2, 4} accepted") {
    ModelSpec m = test::linear_model(2);
    CHECK_THROWS_AS(invariant_moments(m, zero_field(m.slow_basis), 3,
                                      quick_params(1.0, 1), test::key_of(7)),
                    std::invalid_argument);
  }
}

TEST_CASE("mixing rate fit") {
  ModelSpec m = test::linear_model(4);
  const FieldCoeffs x = zero_field(m.slow_basis);

  SUBCASE("additive-noise rate equals 1.5 within one percent") {
    auto fit = estimate_mixing(m, x, unit_mode(m.fast_basis, 1),
                               zero_field(m.fast_basis), 2.0, 1e-3, 2,
                               test::key_of(8), 2);
    CHECK(std::abs(fit.rate - 1.5) < 0.015);
    CHECK(fit.r2 >= 0.999);
    CHECK(fit.prefactor == doctest::Approx(1.0).epsilon(0.01));
  }
  SUBCASE("identical initial data rejected") {
    CHECK_THROWS_AS(
        estimate_mixing(m, x, unit_mode(m.fast_basis, 1),
                        unit_mode(m.fast_basis, 1), 1.0, 1e-3, 1,
                        test::key_of(9), 1),
        std::invalid_argument);
  }
  SUBCASE("destabilizing b2 slows the fitted rate monotonically") {
    double prev = 10.0;
    for (double L : {0.0, 0.25, 0.5}) {
      ModelSpec v = test::linear_model(4, {{"b2_sigma2", L}});
      auto fit = estimate_mixing(v, x, unit_mode(v.fast_basis, 1),
                                 zero_field(v.fast_basis), 2.0, 1e-3, 2,
                                 test::key_of(10), 2);
      CHECK(fit.rate < prev);
      prev = fit.rate;
    }
  }
}

TEST_CASE("averaged drift estimator") {
  SUBCASE("mode-1 value at x = e1 and vanishing other modes") {
    ModelSpec m = test::linear_model(4);
    auto est = estimate_bbar(m, unit_mode(m.slow_basis, 1), quick_params(60.0),
                             test::key_of(11));
    CHECK(std::abs(est.estimate[0] - 1.0 / 3.0) < 3 * est.se[0]);
    for (int k = 1; k < 4; ++k)
      CHECK(std::abs(est.estimate[k]) < 3 * est.se[k] + 1e-6);
  }
  SUBCASE("no fast dependence gives the exact drift with zero spread") {
    ModelSpec m =
        test::linear_model(4, {{"b1_sigma1", 0.7}, {"b1_sigma2", 0.0}});
    auto est = estimate_bbar(m, unit_mode(m.slow_basis, 1), quick_params(2.0, 3),
                             test::key_of(12));
    CHECK(est.estimate[0] == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(est.se.maxCoeff() < 1e-14);
  }
  SUBCASE("linearity across anchors within combined spread") {
    ModelSpec m = test::linear_model(4);
    auto p = quick_params(80.0);
    auto a = estimate_bbar(m, unit_mode(m.slow_basis, 1), p, test::key_of(13));
    auto b = estimate_bbar(m, unit_mode(m.slow_basis, 1, 2.0), p,
                           test::key_of(14));
    const double se = 3 * std::sqrt(4 * a.se[0] * a.se[0] + b.se[0] * b.se[0]);
    CHECK(std::abs(b.estimate[0] - 2 * a.estimate[0]) < se);
  }
}

TEST_CASE("averaged diffusion Gram estimator") {
  SUBCASE("constant unit multiplier gives the identity exactly") {
    ModelSpec m = test::linear_model(4);
    auto est = estimate_S(m, zero_field(m.slow_basis), quick_params(1.0, 2),
                          test::key_of(15));
    CHECK((est.estimate - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(est.se.maxCoeff() < 1e-12);
  }
  SUBCASE("slow-only multiplier reproduces the deterministic Gram matrix") {
    ModelSpec m = test::linear_model(4);
    m.g1 = [](double, double s1, double) { return 1.0 + 0.5 * s1; };
    const FieldCoeffs x = unit_mode(m.slow_basis, 2, 0.8);
    auto est = estimate_S(m, x, quick_params(1.0, 2), test::key_of(16));
    // Oracle: quadrature Gram of the multiplier field on a fine grid.
    SineTransform tr(*m.slow_basis, 8);
    const Eigen::VectorXd xg = tr.to_grid(x.coeffs);
    Eigen::MatrixXd oracle(4, 4);
    for (int h = 1; h <= 4; ++h)
      for (int k = 1; k <= 4; ++k) {
        Eigen::VectorXd ah(8), ak(8);
        for (int j = 0; j < 8; ++j) {
          const double mlt = 1.0 + 0.5 * xg[j];
          ah[j] = mlt * m.slow_basis->eigfun(h, tr.grid_points()[j]);
          ak[j] = mlt * m.slow_basis->eigfun(k, tr.grid_points()[j]);
        }
        oracle(h - 1, k - 1) = tr.inner(ah, ak);
      }
    CHECK((est.estimate - oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(est.se.maxCoeff() < 1e-12);
  }
  SUBCASE("fast-dependent multiplier matches a direct invariant-law oracle") {
    auto sb = test::slow_pi(4);
    auto fb = test::fast_pi(4);
    ModelSpec m = make_model("additive_fast", {}, sb, fb);
    auto est = estimate_S(m, zero_field(sb), quick_params(150.0),
                          test::key_of(17));

    // Oracle: sample v directly from the known Gaussian invariant law
    // (independent modes, variance 1/(2k^2+1)) and average the S_11 sample.
    SineTransform tr(*sb, 8);
    GaussianStream gs(test::key_of(170));
    const int n_oracle = 20000;
    double sum = 0.0, sumsq = 0.0;
    Eigen::VectorXd v(4);
    for (int i = 0; i < n_oracle; ++i) {
      for (int k = 0; k < 4; ++k)
        v[k] = gs.next() * std::sqrt(1.0 / (2.0 * (k + 1) * (k + 1) + 1.0));
      const Eigen::VectorXd vg = tr.to_grid(v);
      Eigen::VectorXd e1m(8);
      for (int j = 0; j < 8; ++j)
        e1m[j] = (2.0 + std::sin(vg[j])) * sb->eigfun(1, tr.grid_points()[j]);
      const double s11 = tr.inner(e1m, e1m);
      sum += s11;
      sumsq += s11 * s11;
    }
    const double oracle_mean = sum / n_oracle;
    const double oracle_se =
        std::sqrt((sumsq / n_oracle - oracle_mean * oracle_mean) / n_oracle);
    const double combined =
        std::sqrt(oracle_se * oracle_se + est.se(0, 0) * est.se(0, 0));
    CHECK(std::abs(est.estimate(0, 0) - oracle_mean) < 3 * combined);
  }
  SUBCASE("output is symmetric") {
    auto sb = test::slow_pi(4);
    auto fb = test::fast_pi(4);
    ModelSpec m = make_model("additive_fast", {}, sb, fb);
    auto est = estimate_S(m, unit_mode(sb, 1), quick_params(5.0, 2),
                          test::key_of(18));
    CHECK((est.estimate - est.estimate.transpose()).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("symmetric PSD square root") {
  SUBCASE("identity and diagonal") {
    CHECK((sqrt_spd(Eigen::MatrixXd::Identity(3, 3)) -
           Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const Eigen::MatrixXd g = sqrt_spd(d);
    CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(g(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(g(0, 1)) < 1e-14);
  }
  SUBCASE("reconstruction residual on a random SPD matrix") {
    std::mt19937_64 eng(19);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd mrand(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) mrand(i, j) = nd(eng);
    const Eigen::MatrixXd a = mrand.transpose() * mrand;
    const Eigen::MatrixXd g = sqrt_spd(a);
    CHECK((g * g - a).norm() <= 1e-10 * a.norm());
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("small negative eigenvalues are clipped") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
    s(1, 1) = -1e-9;
    const Eigen::MatrixXd g = sqrt_spd(s);
    CHECK(g(1, 1) == 0.0);
  }
  SUBCASE("asymmetry and strong negativity rejected") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(sqrt_spd(s), std::invalid_argument);
    Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(sqrt_spd(neg), std::invalid_argument);
  }
}

TEST_CASE("estimator spread shrinks like the replica square root") {
  ModelSpec m = test::linear_model(2);
  std::vector<double> log_r, log_se;
  for (int r : {16, 64, 256}) {
    auto p = quick_params(2.0, r);
    auto stats = ergodic_average(
        m, zero_field(m.slow_basis), zero_field(m.fast_basis),
        [](const Eigen::VectorXd& v) { return v[0] * v[0]; }, p,
        test::key_of(20));
    log_r.push_back(std::log(double(r)));
    log_se.push_back(std::log(stats.se));
  }
  const double slope = fit_line(log_r, log_se).slope;
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("drift Lipschitz probe") {
  ModelSpec m = test::linear_model(4);
  const ConditionM0Report gate = passed_gate(m);

  SUBCASE("linear model quotient near the top diagonal gain") {
    std::vector<FieldCoeffs> anchors{unit_mode(m.slow_basis, 1),
                                     unit_mode(m.slow_basis, 1, 2.0),
                                     zero_field(m.slow_basis)};
    auto probe = bbar_lipschitz_probe(m, gate, anchors, quick_params(60.0),
                                      test::key_of(21));
    REQUIRE(probe.pairs.size() == 3);
    CHECK(std::abs(probe.max_quotient - 1.0 / 3.0) < 0.05);
  }
  SUBCASE("identical anchors are skipped") {
    std::vector<FieldCoeffs> anchors{unit_mode(m.slow_basis, 1),
                                     unit_mode(m.slow_basis, 1)};
    auto probe = bbar_lipschitz_probe(m, gate, anchors, quick_params(1.0, 2),
                                      test::key_of(22));
    CHECK(probe.pairs.empty());
  }
  SUBCASE("argument-free drift has quotient zero") {
    ModelSpec z = test::linear_model(4, {{"b1_sigma1", 0.0}, {"b1_sigma2", 0.0}});
    std::vector<FieldCoeffs> anchors{unit_mode(z.slow_basis, 1),
                                     zero_field(z.slow_basis)};
    auto probe = bbar_lipschitz_probe(z, passed_gate(z), anchors,
                                      quick_params(1.0, 2), test::key_of(23));
    CHECK(probe.max_quotient == 0.0);
  }
  SUBCASE("failed contraction gate rejected") {
    ModelSpec bad = test::linear_model(4, {{"b2_sigma2", -0.8}});
    CHECK_THROWS_AS(
        bbar_lipschitz_probe(bad, passed_gate(bad),
                             {unit_mode(bad.slow_basis, 1)},
                             quick_params(1.0, 1), test::key_of(24)),
        std::invalid_argument);
  }
}

TEST_CASE("estimator-backed averaged coefficients") {
  ModelSpec m = test::linear_model(4);
  ErgodicParams p = quick_params(100.0);
  const AveragedCoeffs avg =
      make_estimated_averaged(m, p, {zero_field(m.slow_basis)}, test::key_of(25));
  CHECK(avg.provenance == AveragedCoeffs::Provenance::estimated);
  // Reconstructed drift operator close to the diagonal gains.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  x[0] = 1.0;
  x[3] = -2.0;
  const Eigen::VectorXd b = avg.bbar(x);
  CHECK(b[0] == doctest::Approx(1.0 / 3.0).epsilon(0.08));
  CHECK(b[3] == doctest::Approx(-2.0 / 33.0).epsilon(0.15));
  // g1 does not depend on the fast variable: exact factor.
  CHECK((avg.gbar_for(x) - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("cached on-demand drift evaluator") {
  ModelSpec m = test::linear_model(2);
  auto bbar = make_cached_bbar(m, quick_params(20.0, 4), test::key_of(26));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  x[0] = 1.0;
  const Eigen::VectorXd first = bbar(x);
  const Eigen::VectorXd second = bbar(x);
  CHECK((first - second).cwiseAbs().maxCoeff() == 0.0);
  CHECK(first[0] == doctest::Approx(1.0 / 3.0).epsilon(0.1));
}
