#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "twoscale/khasminskii.hpp"

using namespace twoscale;

namespace {

Trajectory run_coupled_traj(const ModelSpec& m, double eps, double T, double dt,
                            std::uint64_t seed, double x_amp = 1.0,
                            double y_amp = 0.0) {
  auto key = test::key_of(seed);
  return simulate_coupled(m, unit_mode(m.slow_basis, 1, x_amp),
                          unit_mode(m.fast_basis, 1, y_amp), eps, T, dt,
                          key.with(Channel::slow_noise),
                          key.with(Channel::fast_noise),
                          default_grid_size(m));
}

}  // namespace

TEST_CASE("partition plan formulas") {
  SUBCASE("logarithmic block scaling") {
    auto plan = build_partition(0.01, 0.5, 1.0, 1.0);
    CHECK(plan.zeta_eps ==
          doctest::Approx(std::sqrt(std::log(100.0))).epsilon(1e-14));
    CHECK(plan.zeta_eps == doctest::Approx(2.1459660263).epsilon(1e-9));
    CHECK(plan.delta_eps == doctest::Approx(0.021459660263).epsilon(1e-9));
    CHECK(plan.delta_eps / plan.eps == plan.zeta_eps);
    CHECK(plan.interval_count == 47);  // ceil(1 / 0.02146)
  }
  SUBCASE("kappa1 = kappa2 = 1") {
    auto plan = build_partition(0.1, 1.0, 1.0, 1.0);
    CHECK(plan.zeta_eps == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  }
  SUBCASE("monotone in eps") {
    double prev_delta = 1e9, prev_zeta = 0.0;
    for (double eps : {0.1, 0.05, 0.01, 0.002}) {
      auto plan = build_partition(eps, 0.5, 1.0, 1.0);
      CHECK(plan.delta_eps < prev_delta);
      CHECK(plan.zeta_eps > prev_zeta);
      prev_delta = plan.delta_eps;
      prev_zeta = plan.zeta_eps;
    }
  }
  SUBCASE("recomputation is idempotent") {
    auto a = build_partition(0.03, 0.5, 1.0, 2.0);
    auto b = build_partition(a.eps, a.kappa1, a.kappa2, a.T);
    CHECK(a.zeta_eps == b.zeta_eps);
    CHECK(a.delta_eps == b.delta_eps);
    CHECK(a.interval_count == b.interval_count);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(build_partition(1.0, 0.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_partition(0.0, 0.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_partition(0.1, -1.0, 1.0, 1.0), std::invalid_argument);
    // Block longer than the horizon.
    CHECK_THROWS_AS(build_partition(0.9, 1.0, 1.0, 0.05), std::invalid_argument);
  }
}

TEST_CASE("cylindrical function validation") {
  auto basis = test::slow_pi(4);
  SUBCASE("consistent derivatives pass") {
    CHECK_NOTHROW(validate_cylindrical(mode_square_fn(basis, 1)));
  }
  SUBCASE("wrong gradient rejected") {
    CylindricalFn phi = mode_square_fn(basis, 1);
    phi.grad = [](const Eigen::VectorXd& th) {
      return Eigen::VectorXd::Constant(1, 3.0 * th[0]).eval();
    };
    CHECK_THROWS_AS(validate_cylindrical(phi), std::invalid_argument);
  }
  SUBCASE("pairings project onto the leading modes") {
    CylindricalFn phi = mode_square_fn(basis, 2);
    phi.n_proj = 1;  // projection kills mode 2
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x[1] = 5.0;
    CHECK(phi.pairings(x)[0] == 0.0);
  }
}

TEST_CASE("auxiliary fast process") {
  SUBCASE("slow-independent coefficients reproduce the fast path bitwise") {
    ModelSpec m = test::linear_model(4, {{"b2_sigma1", 0.0}});
    const double eps = 0.05;
    auto plan = build_partition(eps, 0.5, 1.0, 0.5);
    const double dt = plan.delta_eps / 32.0;
    const Trajectory coupled = run_coupled_traj(m, eps, 0.5, dt, 71, 1.0, 0.7);
    const Trajectory aux = simulate_auxiliary(m, coupled, plan);
    REQUIRE(aux.steps() == coupled.steps());
    for (int i = 0; i <= coupled.steps(); ++i)
      CHECK((aux.v[i] - coupled.v[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("freezing every step reproduces the coupled fast path bitwise") {
    // The coupled scheme already evaluates the slow argument at the left
    // endpoint of each step, so one-step blocks change nothing.
    ModelSpec m = test::linear_model(4);
    const double eps = 0.05, dt = 1e-3;
    const Trajectory coupled = run_coupled_traj(m, eps, 0.2, dt, 73);
    PartitionPlan plan;
    plan.eps = eps;
    plan.kappa1 = 0.5;
    plan.kappa2 = 1.0;
    plan.delta_eps = dt;
    plan.zeta_eps = dt / eps;
    plan.T = 0.2;
    plan.interval_count = 200;
    const Trajectory aux = simulate_auxiliary(m, coupled, plan);
    for (int i = 0; i <= coupled.steps(); ++i)
      CHECK((aux.v[i] - coupled.v[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("block gap shrinks with eps") {
    ModelSpec m = test::linear_model(4);
    double prev = 1e9;
    for (double eps : {0.1, 0.02}) {
      auto plan = build_partition(eps, 0.5, 1.0, 0.5);
      const long long blocks =
          static_cast<long long>(std::ceil(plan.delta_eps / (eps / 10.0)));
      const double dt = plan.delta_eps / std::max(blocks, 2ll);
      double sup = 0.0;
      const int reps = 20;
      std::vector<double> worst(reps, 0.0);
      for (int r = 0; r < reps; ++r) {
        const Trajectory coupled =
            run_coupled_traj(m, eps, 0.5, dt, 1000 + 10 * r);
        const Trajectory aux = simulate_auxiliary(m, coupled, plan);
        for (int i = 0; i <= coupled.steps(); ++i)
          worst[r] =
              std::max(worst[r], (aux.v[i] - coupled.v[i]).squaredNorm());
      }
      for (int r = 0; r < reps; ++r) sup += worst[r] / reps;
      CHECK(sup < prev);
      prev = sup;
    }
  }
  SUBCASE("misaligned step rejected") {
    ModelSpec m = test::linear_model(2);
    auto plan = build_partition(0.05, 0.5, 1.0, 0.5);
    const Trajectory coupled = run_coupled_traj(m, 0.05, 0.2, 1e-3, 79);
    CHECK_THROWS_AS(simulate_auxiliary(m, coupled, plan), std::invalid_argument);
  }
}

TEST_CASE("remainder path") {
  SUBCASE("fast-independent reaction with exact average vanishes identically") {
    ModelSpec m =
        test::linear_model(4, {{"b1_sigma1", 0.6}, {"b1_sigma2", 0.0}});
    const Trajectory coupled = run_coupled_traj(m, 0.1, 0.5, 0.01, 83);
    const auto r = remainder_path(m, coupled, m.analytic_bbar,
                                  unit_mode(m.slow_basis, 1));
    // The pseudo-spectral drift and the closed form agree to rounding.
    for (double v : r) CHECK(std::abs(v) < 1e-14);
  }
  SUBCASE("zero pairing direction vanishes identically") {
    ModelSpec m = test::linear_model(4);
    const Trajectory coupled = run_coupled_traj(m, 0.1, 0.5, 0.01, 89);
    const auto r = remainder_path(m, coupled, m.analytic_bbar,
                                  unit_mode(m.slow_basis, 1, 0.0));
    for (double v : r) CHECK(v == 0.0);
  }
  SUBCASE("linear in the pairing direction") {
    ModelSpec m = test::linear_model(4);
    const Trajectory coupled = run_coupled_traj(m, 0.1, 0.5, 0.01, 97);
    const auto r1 = remainder_path(m, coupled, m.analytic_bbar,
                                   unit_mode(m.slow_basis, 1));
    const auto r3 = remainder_path(m, coupled, m.analytic_bbar,
                                   unit_mode(m.slow_basis, 1, 3.0));
    for (std::size_t i = 0; i < r1.size(); ++i)
      CHECK(r3[i] == doctest::Approx(3.0 * r1[i]).epsilon(1e-12));
  }
}

TEST_CASE("Kolmogorov operator evaluation") {
  ModelSpec m = test::linear_model(8);
  const AveragedCoeffs avg = make_analytic_averaged(m);
  const CylindricalFn phi = mode_square_fn(m.slow_basis, 1);

  SUBCASE("hand value at x = e1") {
    const double lav =
        eval_generator_averaged(phi, avg, m.slow_basis, unit_mode(m.slow_basis, 1));
    CHECK(lav == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
  }
  SUBCASE("constant test function gives zero for both operators") {
    CylindricalFn c;
    c.f = [](const Eigen::VectorXd&) { return 1.0; };
    c.grad = [](const Eigen::VectorXd& th) {
      return Eigen::VectorXd::Zero(th.size()).eval();
    };
    c.hess = [](const Eigen::VectorXd& th) {
      return Eigen::MatrixXd::Zero(th.size(), th.size()).eval();
    };
    c.anchors = {unit_mode(m.slow_basis, 1).coeffs};
    c.n_proj = 8;
    CHECK(eval_generator_slow(c, m, unit_mode(m.slow_basis, 1),
                              unit_mode(m.fast_basis, 2)) == 0.0);
    CHECK(eval_generator_averaged(c, avg, m.slow_basis,
                                  unit_mode(m.slow_basis, 1)) == 0.0);
  }
  SUBCASE("coefficients independent of the fast variable collapse the gap") {
    ModelSpec flat =
        test::linear_model(8, {{"b1_sigma1", 0.7}, {"b1_sigma2", 0.0}});
    const AveragedCoeffs favg = make_analytic_averaged(flat);
    std::mt19937_64 eng(101);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXd xc(8), yc(8);
      for (int k = 0; k < 8; ++k) {
        xc[k] = nd(eng);
        yc[k] = nd(eng);
      }
      const FieldCoeffs x = make_field(flat.slow_basis, xc);
      const FieldCoeffs y = make_field(flat.fast_basis, yc);
      const double lsl = eval_generator_slow(phi, flat, x, y);
      const double lav = eval_generator_averaged(phi, favg, flat.slow_basis, x);
      CHECK(lsl == doctest::Approx(lav).epsilon(1e-12));
    }
  }
  SUBCASE("agreement with finite-difference derivatives of f") {
    CylindricalFn fd = phi;
    const auto f = phi.f;
    const double h = 1e-5;
    fd.grad = [f, h](const Eigen::VectorXd& th) {
      Eigen::VectorXd g(th.size());
      for (int i = 0; i < th.size(); ++i) {
        Eigen::VectorXd p = th, q = th;
        p[i] += h;
        q[i] -= h;
        g[i] = (f(p) - f(q)) / (2 * h);
      }
      return g;
    };
    fd.hess = [f, h](const Eigen::VectorXd& th) {
      Eigen::MatrixXd m2(th.size(), th.size());
      for (int i = 0; i < th.size(); ++i)
        for (int j = 0; j < th.size(); ++j) {
          Eigen::VectorXd pp = th, pm = th, mp = th, mm = th;
          pp[i] += h; pp[j] += h;
          pm[i] += h; pm[j] -= h;
          mp[i] -= h; mp[j] += h;
          mm[i] -= h; mm[j] -= h;
          m2(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
        }
      return m2;
    };
    const FieldCoeffs x = unit_mode(m.slow_basis, 1, 0.8);
    const FieldCoeffs y = unit_mode(m.fast_basis, 1, -0.3);
    CHECK(eval_generator_slow(fd, m, x, y) ==
          doctest::Approx(eval_generator_slow(phi, m, x, y)).epsilon(1e-6));
    CHECK(eval_generator_averaged(fd, avg, m.slow_basis, x) ==
          doctest::Approx(eval_generator_averaged(phi, avg, m.slow_basis, x))
              .epsilon(1e-6));
  }
  SUBCASE("projection beyond the basis rejected") {
    CylindricalFn bad = phi;
    bad.n_proj = 9;
    CHECK_THROWS_AS(
        eval_generator_slow(bad, m, unit_mode(m.slow_basis, 1),
                            unit_mode(m.fast_basis, 1)),
        std::invalid_argument);
  }
}

TEST_CASE("Kolmogorov gap estimator") {
  ModelSpec m = test::linear_model(4);
  const AveragedCoeffs avg = make_analytic_averaged(m);
  const CylindricalFn phi = mode_square_fn(m.slow_basis, 1);
  const FieldCoeffs x = unit_mode(m.slow_basis, 1);
  const FieldCoeffs y = zero_field(m.fast_basis);

  SUBCASE("empty interval gives exactly zero") {
    GapParams p;
    p.t1 = 0.3;
    p.t2 = 0.3;
    p.dt = 1e-3;
    auto stats = kolmogorov_gap(m, avg, phi, x, y, 0.05, p, test::key_of(103));
    CHECK(stats.estimate == 0.0);
    CHECK(stats.se == 0.0);
  }
  SUBCASE("fast-independent control is zero to rounding") {
    ModelSpec flat =
        test::linear_model(4, {{"b1_sigma1", 0.7}, {"b1_sigma2", 0.0}});
    const AveragedCoeffs favg = make_analytic_averaged(flat);
    GapParams p;
    p.t1 = 0.1;
    p.t2 = 0.3;
    p.dt = 2e-3;
    p.outer_replicas = 10;
    p.inner_replicas = 10;
    p.jobs = 2;
    auto stats =
        kolmogorov_gap(flat, favg, phi, x, y, 0.05, p, test::key_of(107));
    CHECK(stats.estimate < 1e-12);
  }
  SUBCASE("replica floor enforced") {
    GapParams p;
    p.t1 = 0.0;
    p.t2 = 0.2;
    p.outer_replicas = 5;
    CHECK_THROWS_AS(kolmogorov_gap(m, avg, phi, x, y, 0.05, p, test::key_of(109)),
                    std::invalid_argument);
  }
}
