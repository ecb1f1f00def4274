#include "twoscale/khasminskii.hpp"

#include <cmath>
#include <sstream>

#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

int resolve_grid(const ModelSpec& model, int grid_size) {
  return grid_size > 0 ? grid_size : default_grid_size(model);
}

// Shared machinery for evaluating the two Kolmogorov operators on one
// cylindrical function: projected anchors, Q-weighted anchor fields on the
// grid, and the diagonal drift pairings.
class GeneratorEvaluator {
 public:
  GeneratorEvaluator(const ModelSpec& model, const CylindricalFn& phi,
                     int grid_size)
      : model_(model), phi_(phi), tr_(*model.slow_basis, grid_size) {
    const auto& basis = *model.slow_basis;
    const int n = basis.mode_count;
    if (phi.n_proj < 1 || phi.n_proj > n)
      throw std::invalid_argument(
          "cylindrical function projects beyond the basis");
    const int k = phi.arity();
    proj_anchors_.resize(k);
    q_anchor_grids_.resize(k);
    for (int i = 0; i < k; ++i) {
      if (phi.anchors[i].size() != n)
        throw std::invalid_argument("cylindrical anchor has wrong dimension");
      Eigen::VectorXd pa = Eigen::VectorXd::Zero(n);
      pa.head(phi.n_proj) = phi.anchors[i].head(phi.n_proj);
      proj_anchors_[i] = pa;
      q_anchor_grids_[i] = tr_.to_grid(basis.noise_amps.cwiseProduct(pa));
    }
  }

  double slow(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    const auto& basis = *model_.slow_basis;
    const int k = phi_.arity();
    const int m = tr_.grid_size();
    const Eigen::VectorXd theta = phi_.pairings(u);
    const Eigen::VectorXd grad = phi_.grad(theta);
    const Eigen::MatrixXd hess = phi_.hess(theta);

    const Eigen::VectorXd ug = tr_.to_grid(u);
    const Eigen::VectorXd vg = tr_.to_grid(v);
    const Eigen::VectorXd& pts = tr_.grid_points();
    Eigen::VectorXd g1g(m), b1g(m);
    for (int j = 0; j < m; ++j) {
      g1g[j] = model_.g1(pts[j], ug[j], vg[j]);
      b1g[j] = model_.b1(pts[j], ug[j], vg[j]);
    }
    const Eigen::VectorXd drift = tr_.from_grid(b1g);

    double out = 0.0;
    std::vector<Eigen::VectorXd> mg(k);
    for (int i = 0; i < k; ++i) mg[i] = g1g.cwiseProduct(q_anchor_grids_[i]);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        out += 0.5 * hess(i, j) * tr_.inner(mg[i], mg[j]);
    for (int i = 0; i < k; ++i)
      out += grad[i] * (drift_pairing(u, i, basis) +
                        drift.dot(proj_anchors_[i]));
    return out;
  }

  double averaged(const AveragedCoeffs& avg, const Eigen::VectorXd& u) const {
    const auto& basis = *model_.slow_basis;
    const int k = phi_.arity();
    const Eigen::VectorXd theta = phi_.pairings(u);
    const Eigen::VectorXd grad = phi_.grad(theta);
    const Eigen::MatrixXd hess = phi_.hess(theta);
    const Eigen::MatrixXd& gbar = avg.gbar_for(u);
    const Eigen::VectorXd drift = avg.bbar(u);

    double out = 0.0;
    std::vector<Eigen::VectorXd> ga(k);
    for (int i = 0; i < k; ++i) ga[i] = gbar * proj_anchors_[i];
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out += 0.5 * hess(i, j) * ga[i].dot(ga[j]);
    for (int i = 0; i < k; ++i)
      out += grad[i] *
             (drift_pairing(u, i, basis) + drift.dot(proj_anchors_[i]));
    return out;
  }

 private:
  // <x, A P a_i> = -sum_k alpha_k x_k (P a_i)_k.
  double drift_pairing(const Eigen::VectorXd& u, int i,
                       const SpectralBasis& basis) const {
    return -(basis.eigenvalues.cwiseProduct(u)).dot(proj_anchors_[i]);
  }

  const ModelSpec& model_;
  const CylindricalFn& phi_;
  SineTransform tr_;
  std::vector<Eigen::VectorXd> proj_anchors_;
  std::vector<Eigen::VectorXd> q_anchor_grids_;
};

}  // namespace

PartitionPlan build_partition(double eps, double kappa1, double kappa2,
                              double T) {
  if (!(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("build_partition: eps must be in (0, 1)");
  if (!(kappa1 > 0.0) || !(kappa2 > 0.0))
    throw std::invalid_argument("build_partition: kappa1, kappa2 must be > 0");
  if (!(T > 0.0)) throw std::invalid_argument("build_partition: T must be > 0");

  PartitionPlan plan;
  plan.eps = eps;
  plan.kappa1 = kappa1;
  plan.kappa2 = kappa2;
  plan.T = T;
  plan.zeta_eps = std::pow(kappa2 * std::log(1.0 / eps), kappa1);
  plan.delta_eps = eps * plan.zeta_eps;
  if (plan.delta_eps >= T)
    throw std::invalid_argument("build_partition: eps too large for T");
  plan.interval_count = static_cast<int>(std::ceil(T / plan.delta_eps));
  return plan;
}

Eigen::VectorXd CylindricalFn::pairings(const Eigen::VectorXd& x) const {
  Eigen::VectorXd theta(arity());
  for (int i = 0; i < arity(); ++i)
    theta[i] = x.head(n_proj).dot(anchors[i].head(n_proj));
  return theta;
}

void validate_cylindrical(const CylindricalFn& phi) {
  const int k = phi.arity();
  if (k < 1) throw std::invalid_argument("cylindrical function needs anchors");
  if (!phi.f || !phi.grad || !phi.hess)
    throw std::invalid_argument("cylindrical function needs f, grad, hess");

  // Probe at a handful of fixed points.
  std::vector<Eigen::VectorXd> probes;
  probes.push_back(Eigen::VectorXd::Zero(k));
  probes.push_back(Eigen::VectorXd::Constant(k, 0.7));
  Eigen::VectorXd alt(k);
  for (int i = 0; i < k; ++i) alt[i] = (i % 2 == 0) ? -0.4 : 1.1;
  probes.push_back(alt);

  const double h = 1e-5;
  for (const auto& th : probes) {
    const Eigen::VectorXd grad = phi.grad(th);
    const Eigen::MatrixXd hess = phi.hess(th);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd tp = th, tm = th;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (phi.f(tp) - phi.f(tm)) / (2 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(grad[i])});
      if (std::abs(fd - grad[i]) > 1e-4 * scale)
        throw std::invalid_argument(
            "cylindrical gradient disagrees with finite differences");
      for (int j = 0; j < k; ++j) {
        Eigen::VectorXd tpp = th, tpm = th, tmp = th, tmm = th;
        tpp[i] += h; tpp[j] += h;
        tpm[i] += h; tpm[j] -= h;
        tmp[i] -= h; tmp[j] += h;
        tmm[i] -= h; tmm[j] -= h;
        const double fd2 =
            (phi.f(tpp) - phi.f(tpm) - phi.f(tmp) + phi.f(tmm)) / (4 * h * h);
        const double s2 = std::max({1.0, std::abs(fd2), std::abs(hess(i, j))});
        if (std::abs(fd2 - hess(i, j)) > 1e-4 * s2)
          throw std::invalid_argument(
              "cylindrical Hessian disagrees with finite differences");
      }
    }
  }
}

CylindricalFn mode_square_fn(const BasisPtr& slow_basis, int k) {
  if (k < 1 || k > slow_basis->mode_count)
    throw std::invalid_argument("mode_square_fn: mode out of range");
  CylindricalFn phi;
  phi.f = [](const Eigen::VectorXd& th) { return th[0] * th[0]; };
  phi.grad = [](const Eigen::VectorXd& th) {
    return Eigen::VectorXd::Constant(1, 2.0 * th[0]).eval();
  };
  phi.hess = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, 2.0).eval();
  };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(slow_basis->mode_count);
  a[k - 1] = 1.0;
  phi.anchors = {a};
  phi.n_proj = slow_basis->mode_count;
  return phi;
}

Trajectory simulate_auxiliary(const ModelSpec& model, const Trajectory& coupled,
                              const PartitionPlan& plan, int grid_size) {
  if (!coupled.has_u() || !coupled.has_v())
    throw std::invalid_argument("simulate_auxiliary: need both u and v paths");
  const double dt = coupled.dt;
  const long long bs = std::llround(plan.delta_eps / dt);
  if (bs < 1 || std::abs(bs * dt - plan.delta_eps) > 1e-9)
    throw std::invalid_argument(
        "simulate_auxiliary: dt does not divide delta_eps");

  const int grid = grid_size > 0
                       ? grid_size
                       : (coupled.grid_size > 0 ? coupled.grid_size
                                                : default_grid_size(model));
  ExpEuler scheme(model, dt, plan.eps, grid);
  GaussianStream fast(coupled.fast_key);  // replay of the coupled increments
  const int n = coupled.steps();
  const int nm = model.fast_basis->mode_count;

  Trajectory aux;
  aux.dt = dt;
  aux.eps = plan.eps;
  aux.grid_size = grid;
  aux.fast_key = coupled.fast_key;
  aux.times = coupled.times;
  aux.v.resize(n + 1);
  aux.v[0] = coupled.v[0];

  Eigen::VectorXd vhat = coupled.v[0];
  Eigen::VectorXd x_grid = scheme.transform().to_grid(coupled.u[0]);
  Eigen::VectorXd z(nm);
  for (int i = 1; i <= n; ++i) {
    const long long left = i - 1;
    if (left % bs == 0) {
      // Block start: refreeze the slow argument and restart from v_eps.
      x_grid = scheme.transform().to_grid(coupled.u[left]);
      vhat = coupled.v[left];
    }
    fast.fill(z);
    scheme.advance_fast(x_grid, vhat, z);
    aux.v[i] = vhat;
  }
  return aux;
}

std::vector<double> remainder_path(
    const ModelSpec& model, const Trajectory& coupled,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& bbar,
    const FieldCoeffs& h, int grid_size) {
  if (!coupled.has_u() || !coupled.has_v())
    throw std::invalid_argument("remainder_path: need both u and v paths");
  if (h.coeffs.size() != model.slow_basis->mode_count)
    throw std::invalid_argument("remainder_path: h not in the truncated span");

  const int grid = grid_size > 0
                       ? grid_size
                       : (coupled.grid_size > 0 ? coupled.grid_size
                                                : default_grid_size(model));
  SineTransform tr(*model.slow_basis, grid);
  const Eigen::VectorXd& pts = tr.grid_points();
  const int n = coupled.steps();

  auto integrand = [&](int i) {
    const Eigen::VectorXd ug = tr.to_grid(coupled.u[i]);
    const Eigen::VectorXd vg = tr.to_grid(coupled.v[i]);
    Eigen::VectorXd b1g(grid);
    for (int j = 0; j < grid; ++j)
      b1g[j] = model.b1(pts[j], ug[j], vg[j]);
    const Eigen::VectorXd diff = tr.from_grid(b1g) - bbar(coupled.u[i]);
    const double val = diff.dot(h.coeffs);
    if (!std::isfinite(val))
      throw std::runtime_error("remainder_path: non-finite integrand");
    return val;
  };

  std::vector<double> r(n + 1, 0.0);
  double prev = integrand(0);
  for (int i = 1; i <= n; ++i) {
    const double cur = integrand(i);
    r[i] = r[i - 1] + 0.5 * coupled.dt * (prev + cur);
    prev = cur;
  }
  return r;
}

double eval_generator_slow(const CylindricalFn& phi, const ModelSpec& model,
                           const FieldCoeffs& x, const FieldCoeffs& y,
                           int grid_size) {
  validate_cylindrical(phi);
  GeneratorEvaluator gen(model, phi, resolve_grid(model, grid_size));
  return gen.slow(x.coeffs, y.coeffs);
}

double eval_generator_averaged(const CylindricalFn& phi,
                               const AveragedCoeffs& avg,
                               const BasisPtr& slow_basis, const FieldCoeffs& x) {
  validate_cylindrical(phi);
  ModelSpec shell;
  shell.slow_basis = slow_basis;
  shell.fast_basis = slow_basis;
  GeneratorEvaluator gen(shell, phi, slow_basis->mode_count);
  return gen.averaged(avg, x.coeffs);
}

EstimatorStats kolmogorov_gap(const ModelSpec& model, const AveragedCoeffs& avg,
                              const CylindricalFn& phi, const FieldCoeffs& x,
                              const FieldCoeffs& y, double eps,
                              const GapParams& params, const StreamKey& key) {
  if (params.t1 < 0.0 || params.t1 > params.t2)
    throw std::invalid_argument("kolmogorov_gap: need 0 <= t1 <= t2");
  if (params.outer_replicas < 10 || params.inner_replicas < 10)
    throw std::invalid_argument("kolmogorov_gap: replica counts must be >= 10");
  if (params.dt > eps / 10.0 + 1e-15)
    throw StabilityError("kolmogorov_gap: dt exceeds eps/10");
  validate_cylindrical(phi);

  EstimatorStats stats;
  stats.T = params.t2 - params.t1;
  stats.Tb = params.t1;
  stats.seed = key.seed;
  if (params.t2 == params.t1) {
    stats.replicas = params.outer_replicas;
    stats.per_replica.assign(params.outer_replicas, 0.0);
    return stats;
  }

  const int grid = resolve_grid(model, params.grid_size);
  const GeneratorEvaluator gen(model, phi, grid);
  const double dt = params.dt;
  const long long n_pre = std::llround(params.t1 / dt);
  const long long n_seg = std::llround((params.t2 - params.t1) / dt);
  const int nm = model.slow_basis->mode_count;

  stats.per_replica.assign(params.outer_replicas, 0.0);
  parallel_for(params.jobs, params.outer_replicas, [&](int o) {
    const StreamKey base = key.with_replica(static_cast<std::uint32_t>(o));
    ExpEuler scheme(model, dt, eps, grid);
    Eigen::VectorXd u1 = x.coeffs, v1 = y.coeffs, z1(nm), z2(nm);
    if (n_pre > 0) {
      GaussianStream slow(base.with(Channel::slow_noise));
      GaussianStream fast(base.with(Channel::fast_noise));
      for (long long i = 0; i < n_pre; ++i) {
        slow.fill(z1);
        fast.fill(z2);
        scheme.advance_coupled(u1, v1, z1, z2);
      }
    }
    // Conditional expectation given the path to t1, approximated by the
    // average over fresh noise branches on [t1, t2].
    double mean_integral = 0.0;
    for (int b = 0; b < params.inner_replicas; ++b) {
      const StreamKey bk = base.with_branch(static_cast<std::uint32_t>(b + 1));
      GaussianStream slow(bk.with(Channel::slow_noise));
      GaussianStream fast(bk.with(Channel::fast_noise));
      Eigen::VectorXd u = u1, v = v1;
      double acc = 0.0;
      double prev = gen.slow(u, v) - gen.averaged(avg, u);
      for (long long i = 0; i < n_seg; ++i) {
        slow.fill(z1);
        fast.fill(z2);
        scheme.advance_coupled(u, v, z1, z2);
        const double cur = gen.slow(u, v) - gen.averaged(avg, u);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
      }
      mean_integral += acc;
    }
    stats.per_replica[o] = std::abs(mean_integral / params.inner_replicas);
  });

  const int r = params.outer_replicas;
  stats.replicas = r;
  double mean = 0.0;
  for (double v : stats.per_replica) mean += v;
  mean /= r;
  stats.estimate = mean;
  if (r > 1) {
    double ss = 0.0;
    for (double v : stats.per_replica) ss += (v - mean) * (v - mean);
    stats.se = std::sqrt(ss / (r - 1) / r);
  }
  return stats;
}

}  // namespace twoscale
