#include "twoscale/ergodics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "twoscale/io_util.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

int resolve_grid(const ModelSpec& model, int grid_size) {
  return grid_size > 0 ? grid_size : default_grid_size(model);
}

double resolve_burn_in(const ModelSpec& model, double tb) {
  return tb >= 0.0 ? tb : default_burn_in(model);
}

// Trapezoid weight of step i inside [i0, i1].
double trap_w(long long i, long long i0, long long i1) {
  return (i == i0 || i == i1) ? 0.5 : 1.0;
}

struct Window {
  long long i0 = 0, i1 = 0;
  double t_total = 0.0, dt = 0.0;

  Window(double T, double Tb, double dt_in) {
    dt = dt_in;
    i0 = std::llround(Tb / dt);
    i1 = i0 + std::llround(T / dt);
    if (i1 <= i0) i1 = i0 + 1;
    t_total = T;
  }
  double weight(long long i) const {
    if (i < i0 || i > i1) return 0.0;
    return trap_w(i, i0, i1) * dt / t_total;
  }
  // Run length that guarantees the last window step is produced.
  double run_time() const { return i1 * dt; }
};

void finalize_scalar(EstimatorStats& s) {
  const int r = static_cast<int>(s.per_replica.size());
  s.replicas = r;
  double mean = 0.0;
  for (double v : s.per_replica) mean += v;
  mean /= r;
  s.estimate = mean;
  if (r > 1) {
    double ss = 0.0;
    for (double v : s.per_replica) ss += (v - mean) * (v - mean);
    s.se = std::sqrt(ss / (r - 1) / r);
  } else {
    s.se = 0.0;
  }
}

}  // namespace

nlohmann::json EstimatorStats::to_json() const {
  nlohmann::json j;
  j["estimate"] = estimate;
  j["se"] = se;
  j["T"] = T;
  j["Tb"] = Tb;
  j["replicas"] = replicas;
  j["seed"] = seed;
  return j;
}

double default_burn_in(const ModelSpec& model) {
  return 5.0 / model.fast_basis->spectral_gap();
}

EstimatorStats ergodic_average(const ModelSpec& model, const FieldCoeffs& x,
                               const FieldCoeffs& y, const Functional& phi,
                               const ErgodicParams& params, const StreamKey& key) {
  if (!(params.T > 0.0)) throw std::invalid_argument("ergodic_average: T must be > 0");
  const double tb = resolve_burn_in(model, params.Tb);
  const int grid = resolve_grid(model, params.grid_size);
  const Window win(params.T, tb, params.dt);

  EstimatorStats stats;
  stats.T = params.T;
  stats.Tb = tb;
  stats.seed = key.seed;
  stats.per_replica.assign(params.replicas, 0.0);

  parallel_for(params.jobs, params.replicas, [&](int r) {
    double acc = 0.0;
    run_frozen_fast(model, x, y, win.run_time(), params.dt,
                    key.with_replica(r).with(Channel::fast_noise), grid,
                    [&](int i, double t, const Eigen::VectorXd& v) {
                      const double w = win.weight(i);
                      if (w == 0.0) return;
                      const double val = phi(v);
                      if (!std::isfinite(val)) {
                        std::ostringstream msg;
                        msg << "ergodic_average: non-finite functional value at t = "
                            << t;
                        throw std::runtime_error(msg.str());
                      }
                      acc += w * val;
                    });
    stats.per_replica[r] = acc;
  });
  finalize_scalar(stats);
  return stats;
}

EstimatorStats invariant_moments(const ModelSpec& model, const FieldCoeffs& x,
                                 int p, const ErgodicParams& params,
                                 const StreamKey& key) {
  if (p != 2 && p != 4)
    throw std::invalid_argument("invariant_moments: p must be 2 or 4");
  Functional phi = [p](const Eigen::VectorXd& v) {
    const double q = v.squaredNorm();
    return p == 2 ? q : q * q;
  };
  return ergodic_average(model, x, zero_field(model.fast_basis), phi, params, key);
}

MixingFit estimate_mixing(const ModelSpec& model, const FieldCoeffs& x,
                          const FieldCoeffs& y1, const FieldCoeffs& y2,
                          double T, double dt, int replicas,
                          const StreamKey& key, int jobs) {
  if ((y1.coeffs - y2.coeffs).norm() < 1e-14)
    throw std::invalid_argument("estimate_mixing: initial difference is degenerate");

  const int grid = resolve_grid(model, 0);
  const long long n = std::llround(T / dt);
  std::vector<std::vector<double>> diffs(replicas);

  parallel_for(jobs, replicas, [&](int r) {
    ExpEuler scheme(model, dt, 1.0, grid);
    GaussianStream fast(key.with_replica(r).with(Channel::fast_noise));
    const Eigen::VectorXd x_grid = scheme.transform().to_grid(x.coeffs);
    Eigen::VectorXd v1 = y1.coeffs, v2 = y2.coeffs;
    Eigen::VectorXd z(model.fast_basis->mode_count);
    auto& d = diffs[r];
    d.reserve(n + 1);
    d.push_back((v1 - v2).norm());
    for (long long i = 1; i <= n; ++i) {
      fast.fill(z);
      scheme.advance_fast(x_grid, v1, z);
      scheme.advance_fast(x_grid, v2, z);
      d.push_back((v1 - v2).norm());
    }
  });

  MixingFit fit;
  std::vector<double> log_mean, ts;
  for (long long i = 0; i <= n; ++i) {
    double m = 0.0;
    for (int r = 0; r < replicas; ++r) m += diffs[r][i];
    m /= replicas;
    fit.times.push_back(i * dt);
    fit.mean_diff.push_back(m);
    if (m > 1e-13) {
      ts.push_back(i * dt);
      log_mean.push_back(std::log(m));
    }
  }
  if (ts.size() < 3)
    throw std::invalid_argument("estimate_mixing: difference degenerate before fit window");
  const LineFit line = fit_line(ts, log_mean);
  fit.rate = -line.slope;
  fit.prefactor = std::exp(line.intercept);
  fit.r2 = line.r2;
  return fit;
}

VectorEstimate estimate_bbar(const ModelSpec& model, const FieldCoeffs& x,
                             const ErgodicParams& params, const StreamKey& key) {
  const double tb = resolve_burn_in(model, params.Tb);
  const int grid = resolve_grid(model, params.grid_size);
  const Window win(params.T, tb, params.dt);
  const int n = model.slow_basis->mode_count;
  const FieldCoeffs y0 = zero_field(model.fast_basis);

  std::vector<Eigen::VectorXd> per_rep(params.replicas);
  parallel_for(params.jobs, params.replicas, [&](int r) {
    SineTransform tr(*model.slow_basis, grid);
    const Eigen::VectorXd x_grid = tr.to_grid(x.coeffs);
    const Eigen::VectorXd& pts = tr.grid_points();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd b1g(grid);
    run_frozen_fast(model, x, y0, win.run_time(), params.dt,
                    key.with_replica(r).with(Channel::fast_noise), grid,
                    [&](int i, double, const Eigen::VectorXd& v) {
                      const double w = win.weight(i);
                      if (w == 0.0) return;
                      const Eigen::VectorXd vg = tr.to_grid(v);
                      for (int j = 0; j < grid; ++j)
                        b1g[j] = model.b1(pts[j], x_grid[j], vg[j]);
                      acc += w * tr.from_grid(b1g);
                    });
    per_rep[r] = acc;
  });

  VectorEstimate out;
  out.T = params.T;
  out.Tb = tb;
  out.replicas = params.replicas;
  out.estimate = Eigen::VectorXd::Zero(n);
  for (const auto& v : per_rep) out.estimate += v;
  out.estimate /= params.replicas;
  out.se = Eigen::VectorXd::Zero(n);
  if (params.replicas > 1) {
    for (const auto& v : per_rep)
      out.se += (v - out.estimate).cwiseAbs2();
    out.se = (out.se / (params.replicas - 1) / params.replicas).cwiseSqrt();
  }
  return out;
}

MatrixEstimate estimate_S(const ModelSpec& model, const FieldCoeffs& x,
                          const ErgodicParams& params, const StreamKey& key) {
  const double tb = resolve_burn_in(model, params.Tb);
  const int grid = resolve_grid(model, params.grid_size);
  const Window win(params.T, tb, params.dt);
  const int n = model.slow_basis->mode_count;
  const FieldCoeffs y0 = zero_field(model.fast_basis);
  const Eigen::VectorXd lam = model.slow_basis->noise_amps;

  std::vector<Eigen::MatrixXd> per_rep(params.replicas);
  parallel_for(params.jobs, params.replicas, [&](int r) {
    SineTransform tr(*model.slow_basis, grid);
    const Eigen::VectorXd x_grid = tr.to_grid(x.coeffs);
    const Eigen::VectorXd& pts = tr.grid_points();
    // Synthesis matrix columns scaled by the noise amplitudes: the sample is
    // quad_w * Elam^T diag(g1^2) Elam.
    Eigen::MatrixXd elam(grid, n);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < grid; ++j)
        elam(j, k) = lam[k] * model.slow_basis->eigfun(k + 1, pts[j]);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd mult(grid);
    run_frozen_fast(model, x, y0, win.run_time(), params.dt,
                    key.with_replica(r).with(Channel::fast_noise), grid,
                    [&](int i, double, const Eigen::VectorXd& v) {
                      const double w = win.weight(i);
                      if (w == 0.0) return;
                      const Eigen::VectorXd vg = tr.to_grid(v);
                      for (int j = 0; j < grid; ++j) {
                        const double g = model.g1(pts[j], x_grid[j], vg[j]);
                        mult[j] = g * g;
                      }
                      acc.noalias() += (w * tr.quad_weight()) *
                                       (elam.transpose() * mult.asDiagonal() * elam);
                    });
    per_rep[r] = acc;
  });

  MatrixEstimate out;
  out.T = params.T;
  out.Tb = tb;
  out.replicas = params.replicas;
  out.estimate = Eigen::MatrixXd::Zero(n, n);
  for (const auto& m : per_rep) out.estimate += m;
  out.estimate /= params.replicas;
  out.se = Eigen::MatrixXd::Zero(n, n);
  if (params.replicas > 1) {
    for (const auto& m : per_rep)
      out.se += (m - out.estimate).cwiseAbs2();
    out.se = (out.se / (params.replicas - 1) / params.replicas).cwiseSqrt();
  }
  out.estimate = 0.5 * (out.estimate + out.estimate.transpose()).eval();
  return out;
}

Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& S, double rel_tol) {
  if (S.rows() != S.cols()) throw std::invalid_argument("sqrt_spd: matrix not square");
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale)
    throw std::invalid_argument("sqrt_spd: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sqrt_spd: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double norm = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -rel_tol * norm)
      throw std::invalid_argument("sqrt_spd: spectrum negative beyond tolerance");
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

LipschitzProbe bbar_lipschitz_probe(const ModelSpec& model,
                                    const ConditionM0Report& gate,
                                    const std::vector<FieldCoeffs>& anchors,
                                    const ErgodicParams& params,
                                    const StreamKey& key) {
  if (!gate.pass)
    throw std::invalid_argument("bbar_lipschitz_probe: contraction gate not passed");
  std::vector<VectorEstimate> est(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i)
    est[i] = estimate_bbar(model, anchors[i], params,
                           key.with_branch(static_cast<std::uint32_t>(i)));

  LipschitzProbe probe;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      const double dx = (anchors[i].coeffs - anchors[j].coeffs).norm();
      if (dx < 1e-14) continue;  // identical anchors are skipped
      LipschitzProbe::Pair pr;
      pr.i = static_cast<int>(i);
      pr.j = static_cast<int>(j);
      pr.quotient = (est[i].estimate - est[j].estimate).norm() / dx;
      pr.se = std::sqrt(est[i].se.squaredNorm() + est[j].se.squaredNorm()) / dx;
      probe.pairs.push_back(pr);
      probe.max_quotient = std::max(probe.max_quotient, pr.quotient);
    }
  }
  return probe;
}

AveragedCoeffs make_analytic_averaged(const ModelSpec& model) {
  if (!model.analytic_bbar || !model.analytic_gbar)
    throw std::invalid_argument("model '" + model.id +
                                "' has no closed-form averaged coefficients");
  AveragedCoeffs avg;
  avg.provenance = AveragedCoeffs::Provenance::analytic;
  avg.bbar = model.analytic_bbar;
  avg.gbar_at = {model.analytic_gbar()};
  avg.delta_floor = model.delta;
  return avg;
}

AveragedCoeffs make_estimated_averaged(const ModelSpec& model,
                                       const ErgodicParams& params,
                                       const std::vector<FieldCoeffs>& gbar_anchors,
                                       const StreamKey& key) {
  const int n = model.slow_basis->mode_count;
  // Drift: linear reconstruction from unit-mode anchors.
  Eigen::MatrixXd bhat(n, n);
  for (int k = 0; k < n; ++k) {
    const VectorEstimate col =
        estimate_bbar(model, unit_mode(model.slow_basis, k + 1), params,
                      key.with_branch(static_cast<std::uint32_t>(k + 1)));
    bhat.col(k) = col.estimate;
  }

  AveragedCoeffs avg;
  avg.provenance = AveragedCoeffs::Provenance::estimated;
  avg.bbar = [bhat](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return bhat * x;
  };
  avg.delta_floor = model.delta;

  if (!model.g1_depends_on_fast && model.analytic_gbar) {
    avg.gbar_at = {model.analytic_gbar()};
  } else {
    if (gbar_anchors.empty())
      throw std::invalid_argument("make_estimated_averaged: gbar anchors required");
    for (std::size_t i = 0; i < gbar_anchors.size(); ++i) {
      const MatrixEstimate s =
          estimate_S(model, gbar_anchors[i], params,
                     key.with_branch(static_cast<std::uint32_t>(1000 + i)));
      avg.anchors.push_back(gbar_anchors[i].coeffs);
      avg.gbar_at.push_back(sqrt_spd(s.estimate));
    }
  }
  return avg;
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&)> make_cached_bbar(
    const ModelSpec& model, const ErgodicParams& params, const StreamKey& key) {
  auto cache = std::make_shared<std::map<std::vector<double>, Eigen::VectorXd>>();
  const ModelSpec* m = &model;
  return [cache, m, params, key](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    std::vector<double> k(x.begin(), x.end());
    auto it = cache->find(k);
    if (it != cache->end()) return it->second;
    const VectorEstimate est = estimate_bbar(
        *m, make_field(m->slow_basis, x), params,
        key.with_branch(static_cast<std::uint32_t>(cache->size() + 1)));
    cache->emplace(std::move(k), est.estimate);
    return est.estimate;
  };
}

}  // namespace twoscale
