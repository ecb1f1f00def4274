#include "twoscale/integrator.hpp"

#include <cmath>
#include <sstream>

namespace twoscale {

namespace {

long long step_count(double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(T > 0.0)) throw std::invalid_argument("T must be > 0");
  const long long n = std::llround(T / dt);
  return n < 1 ? 1 : n;
}

void check_finite(const Eigen::VectorXd& w, double t, const char* what) {
  if (!w.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite " << what << " at t = " << t << "; aborting";
    throw std::runtime_error(msg.str());
  }
}

void check_stability(double dt, double eps, bool allow_unstable) {
  if (allow_unstable) return;
  if (dt > eps / 10.0 + 1e-15) {
    std::ostringstream msg;
    msg << "dt = " << dt << " exceeds eps/10 = " << eps / 10.0
        << " (pass allow_unstable to override)";
    throw StabilityError(msg.str());
  }
}

}  // namespace

double phi1(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
  return -std::expm1(-z) / z;
}

double conv_std(double lambda, double alpha, double dt_eff) {
  return lambda * std::sqrt(-std::expm1(-2.0 * alpha * dt_eff) / (2.0 * alpha));
}

ExpEuler::ExpEuler(const ModelSpec& model, double dt, double eps, int grid_size)
    : model_(model), tr_(*model.slow_basis, grid_size), dt_(dt), eps_(eps) {
  if (!(dt > 0.0)) throw std::invalid_argument("ExpEuler: dt must be > 0");
  if (!(eps > 0.0) || eps > 1.0)
    throw std::invalid_argument("ExpEuler: eps must be in (0, 1]");
  if (model.slow_basis->mode_count != model.fast_basis->mode_count ||
      model.slow_basis->length != model.fast_basis->length)
    throw std::invalid_argument("ExpEuler: slow/fast bases must share N and L");

  const auto& sb = *model.slow_basis;
  const auto& fb = *model.fast_basis;
  const int n = sb.mode_count;
  decay_slow_.resize(n);
  phidt_slow_.resize(n);
  noise_slow_.resize(n);
  decay_fast_.resize(n);
  phidt_fast_.resize(n);
  nu_fast_.resize(n);
  const double dte = dt / eps;
  for (int k = 0; k < n; ++k) {
    const double zs = sb.eigenvalues[k] * dt;
    decay_slow_[k] = std::exp(-zs);
    phidt_slow_[k] = phi1(zs) * dt;
    noise_slow_[k] = decay_slow_[k] * sb.noise_amps[k] * std::sqrt(dt);
    const double zf = fb.eigenvalues[k] * dte;
    decay_fast_[k] = std::exp(-zf);
    phidt_fast_[k] = phi1(zf) * dte;
    nu_fast_[k] = conv_std(fb.noise_amps[k], fb.eigenvalues[k], dte);
  }
}

void ExpEuler::advance_coupled(Eigen::VectorXd& u, Eigen::VectorXd& v,
                               const Eigen::VectorXd& z_slow,
                               const Eigen::VectorXd& z_fast) const {
  const int m = tr_.grid_size();
  const Eigen::VectorXd ug = tr_.to_grid(u);
  const Eigen::VectorXd vg = tr_.to_grid(v);
  const Eigen::VectorXd& pts = tr_.grid_points();

  Eigen::VectorXd b1g(m), b2g(m), g1g(m), g2g(m);
  for (int j = 0; j < m; ++j) {
    b1g[j] = model_.b1(pts[j], ug[j], vg[j]);
    b2g[j] = model_.b2(pts[j], ug[j], vg[j]);
    g1g[j] = model_.g1(pts[j], ug[j], vg[j]);
    g2g[j] = model_.g2(pts[j], ug[j], vg[j]);
  }

  const Eigen::VectorXd drift_u = tr_.from_grid(b1g);
  const Eigen::VectorXd drift_v = tr_.from_grid(b2g);
  const Eigen::VectorXd noise_u =
      tr_.from_grid(g1g.cwiseProduct(tr_.to_grid(z_slow)));
  const Eigen::VectorXd noise_v =
      tr_.from_grid(g2g.cwiseProduct(tr_.to_grid(z_fast)));

  u = decay_slow_.cwiseProduct(u) + phidt_slow_.cwiseProduct(drift_u) +
      noise_slow_.cwiseProduct(noise_u);
  v = decay_fast_.cwiseProduct(v) + phidt_fast_.cwiseProduct(drift_v) +
      nu_fast_.cwiseProduct(noise_v);
}

void ExpEuler::advance_fast(const Eigen::VectorXd& x_grid, Eigen::VectorXd& v,
                            const Eigen::VectorXd& z_fast) const {
  const int m = tr_.grid_size();
  const Eigen::VectorXd vg = tr_.to_grid(v);
  const Eigen::VectorXd& pts = tr_.grid_points();
  Eigen::VectorXd b2g(m), g2g(m);
  for (int j = 0; j < m; ++j) {
    b2g[j] = model_.b2(pts[j], x_grid[j], vg[j]);
    g2g[j] = model_.g2(pts[j], x_grid[j], vg[j]);
  }
  const Eigen::VectorXd drift_v = tr_.from_grid(b2g);
  const Eigen::VectorXd noise_v =
      tr_.from_grid(g2g.cwiseProduct(tr_.to_grid(z_fast)));
  v = decay_fast_.cwiseProduct(v) + phidt_fast_.cwiseProduct(drift_v) +
      nu_fast_.cwiseProduct(noise_v);
}

void ExpEuler::advance_averaged(const AveragedCoeffs& avg, Eigen::VectorXd& u,
                                const Eigen::VectorXd& z_slow) const {
  const Eigen::VectorXd drift = avg.bbar(u);
  // gbar already carries the noise amplitudes; scale by sqrt(dt) and the
  // left-endpoint decay to match the coupled scheme's noise term.
  const Eigen::VectorXd noise = avg.gbar_for(u) * (std::sqrt(dt_) * z_slow);
  u = decay_slow_.cwiseProduct(u) + phidt_slow_.cwiseProduct(drift) +
      decay_slow_.cwiseProduct(noise);
}

SlowFastState step_coupled(const ModelSpec& model, const SlowFastState& state,
                           double dt, const NoiseDraw& noise, int grid_size,
                           bool allow_unstable) {
  check_stability(dt, state.eps, allow_unstable);
  ExpEuler scheme(model, dt, state.eps, grid_size);
  SlowFastState out = state;
  scheme.advance_coupled(out.u, out.v, noise.z_slow, noise.z_fast);
  out.t = state.t + dt;
  check_finite(out.u, out.t, "slow state");
  check_finite(out.v, out.t, "fast state");
  return out;
}

void run_coupled(const ModelSpec& model, const FieldCoeffs& x,
                 const FieldCoeffs& y, double eps, double T, double dt,
                 const StreamKey& slow_key, const StreamKey& fast_key,
                 int grid_size, bool allow_unstable, const CoupledObserver& obs) {
  check_stability(dt, eps, allow_unstable);
  const long long n = step_count(T, dt);
  ExpEuler scheme(model, dt, eps, grid_size);
  GaussianStream slow(slow_key), fast(fast_key);
  const int nm = model.slow_basis->mode_count;
  Eigen::VectorXd u = x.coeffs, v = y.coeffs, z1(nm), z2(nm);
  obs(0, 0.0, u, v);
  for (long long i = 1; i <= n; ++i) {
    slow.fill(z1);
    fast.fill(z2);
    scheme.advance_coupled(u, v, z1, z2);
    const double t = i * dt;
    check_finite(u, t, "slow state");
    check_finite(v, t, "fast state");
    obs(static_cast<int>(i), t, u, v);
  }
}

void run_frozen_fast(const ModelSpec& model, const FieldCoeffs& x,
                     const FieldCoeffs& y, double T, double dt,
                     const StreamKey& fast_key, int grid_size,
                     const PathObserver& obs) {
  const long long n = step_count(T, dt);
  ExpEuler scheme(model, dt, 1.0, grid_size);
  GaussianStream fast(fast_key);
  const Eigen::VectorXd x_grid = scheme.transform().to_grid(x.coeffs);
  const int nm = model.fast_basis->mode_count;
  Eigen::VectorXd v = y.coeffs, z2(nm);
  obs(0, 0.0, v);
  for (long long i = 1; i <= n; ++i) {
    fast.fill(z2);
    scheme.advance_fast(x_grid, v, z2);
    const double t = i * dt;
    check_finite(v, t, "fast state");
    obs(static_cast<int>(i), t, v);
  }
}

void run_averaged(const AveragedCoeffs& avg, const BasisPtr& slow_basis,
                  const FieldCoeffs& x, double T, double dt,
                  const StreamKey& slow_key, const PathObserver& obs) {
  // The model is not needed beyond its slow basis; borrow a trivial spec so
  // ExpEuler can precompute the slow-mode scales.
  ModelSpec shell;
  shell.slow_basis = slow_basis;
  shell.fast_basis = slow_basis;
  const long long n = step_count(T, dt);
  ExpEuler scheme(shell, dt, 1.0, slow_basis->mode_count);
  GaussianStream slow(slow_key);
  const int nm = slow_basis->mode_count;
  Eigen::VectorXd u = x.coeffs, z1(nm);
  obs(0, 0.0, u);
  for (long long i = 1; i <= n; ++i) {
    slow.fill(z1);
    scheme.advance_averaged(avg, u, z1);
    const double t = i * dt;
    check_finite(u, t, "averaged state");
    obs(static_cast<int>(i), t, u);
  }
}

Trajectory simulate_coupled(const ModelSpec& model, const FieldCoeffs& x,
                            const FieldCoeffs& y, double eps, double T,
                            double dt, const StreamKey& slow_key,
                            const StreamKey& fast_key, int grid_size,
                            bool allow_unstable) {
  Trajectory traj;
  traj.dt = dt;
  traj.eps = eps;
  traj.grid_size = grid_size;
  traj.slow_key = slow_key;
  traj.fast_key = fast_key;
  run_coupled(model, x, y, eps, T, dt, slow_key, fast_key, grid_size,
              allow_unstable,
              [&](int, double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
                traj.times.push_back(t);
                traj.u.push_back(u);
                traj.v.push_back(v);
              });
  return traj;
}

Trajectory simulate_frozen_fast(const ModelSpec& model, const FieldCoeffs& x,
                                const FieldCoeffs& y, double T, double dt,
                                const StreamKey& fast_key, int grid_size) {
  Trajectory traj;
  traj.dt = dt;
  traj.eps = 1.0;
  traj.grid_size = grid_size;
  traj.fast_key = fast_key;
  run_frozen_fast(model, x, y, T, dt, fast_key, grid_size,
                  [&](int, double t, const Eigen::VectorXd& v) {
                    traj.times.push_back(t);
                    traj.v.push_back(v);
                  });
  return traj;
}

Trajectory simulate_averaged(const AveragedCoeffs& avg,
                             const BasisPtr& slow_basis, const FieldCoeffs& x,
                             double T, double dt, const StreamKey& slow_key) {
  Trajectory traj;
  traj.dt = dt;
  traj.eps = 0.0;
  traj.slow_key = slow_key;
  run_averaged(avg, slow_basis, x, T, dt, slow_key,
               [&](int, double t, const Eigen::VectorXd& u) {
                 traj.times.push_back(t);
                 traj.u.push_back(u);
               });
  return traj;
}

int default_grid_size(const ModelSpec& model) {
  return 2 * model.slow_basis->mode_count;
}

}  // namespace twoscale
