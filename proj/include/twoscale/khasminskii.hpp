#pragma once

#include <functional>
#include <vector>

#include "twoscale/ergodics.hpp"

namespace twoscale {

// Time partition of [0, T] into blocks of length delta_eps = eps * zeta_eps
// with zeta_eps = (kappa2 * log(1/eps))^{kappa1}.
struct PartitionPlan {
  double eps = 0.0;
  double kappa1 = 0.5;
  double kappa2 = 1.0;
  double zeta_eps = 0.0;
  double delta_eps = 0.0;
  double T = 0.0;
  int interval_count = 0;
};

PartitionPlan build_partition(double eps, double kappa1, double kappa2, double T);

// Cylindrical test function phi(x) = f(<x, P a_1>, ..., <x, P a_k>) with P
// the projection onto the first n_proj slow modes. Gradient and Hessian of f
// are supplied and validated against finite differences of f at probe points.
struct CylindricalFn {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
  std::vector<Eigen::VectorXd> anchors;  // a_1..a_k as slow coefficients
  int n_proj = 0;

  int arity() const { return static_cast<int>(anchors.size()); }
  // Projected pairings theta_i = <x, P a_i>.
  Eigen::VectorXd pairings(const Eigen::VectorXd& x) const;
  double operator()(const Eigen::VectorXd& x) const { return f(pairings(x)); }
};

// Throws when grad/hess disagree with central differences of f (rel 1e-4).
void validate_cylindrical(const CylindricalFn& phi);

// phi(x) = <x, e_k>^2 as a cylindrical function.
CylindricalFn mode_square_fn(const BasisPtr& slow_basis, int k);

// Fast process restarted block-by-block with the slow argument frozen at the
// block's left endpoint, driven by the SAME fast increments as the coupled
// run (replayed from the trajectory's stream key). The coupled trajectory
// step must divide delta_eps within 1e-9.
Trajectory simulate_auxiliary(const ModelSpec& model, const Trajectory& coupled,
                              const PartitionPlan& plan, int grid_size = 0);

// Cumulative trapezoid of <B1(u, v) - bbar(u), h> along the coupled path.
std::vector<double> remainder_path(
    const ModelSpec& model, const Trajectory& coupled,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& bbar,
    const FieldCoeffs& h, int grid_size = 0);

// Kolmogorov operator of the slow equation with frozen fast component,
// evaluated on a cylindrical function.
double eval_generator_slow(const CylindricalFn& phi, const ModelSpec& model,
                           const FieldCoeffs& x, const FieldCoeffs& y,
                           int grid_size = 0);

// Kolmogorov operator of the averaged equation.
double eval_generator_averaged(const CylindricalFn& phi,
                               const AveragedCoeffs& avg,
                               const BasisPtr& slow_basis, const FieldCoeffs& x);

struct GapParams {
  double t1 = 0.0;
  double t2 = 0.5;
  double dt = 1e-3;
  int outer_replicas = 16;
  int inner_replicas = 32;
  int grid_size = 0;
  int jobs = 1;
};

// Monte Carlo estimate of E | int_{t1}^{t2} E( L_sl phi(u, v) - L_av phi(u)
// | F_{t1} ) dr | by noise branching after t1: the conditional expectation
// is approximated by the inner-replica average.
EstimatorStats kolmogorov_gap(const ModelSpec& model, const AveragedCoeffs& avg,
                              const CylindricalFn& phi, const FieldCoeffs& x,
                              const FieldCoeffs& y, double eps,
                              const GapParams& params, const StreamKey& key);

}  // namespace twoscale
