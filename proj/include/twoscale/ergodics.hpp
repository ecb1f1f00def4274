#pragma once

#include <functional>
#include <vector>

#include "twoscale/averaged.hpp"
#include "twoscale/integrator.hpp"
#include "twoscale/model.hpp"

namespace twoscale {

// Cross-replica statistics of a scalar time-average estimator.
struct EstimatorStats {
  double estimate = 0.0;
  double se = 0.0;
  double T = 0.0;
  double Tb = 0.0;
  int replicas = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_replica;

  nlohmann::json to_json() const;
};

struct VectorEstimate {
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  double T = 0.0;
  double Tb = 0.0;
  int replicas = 0;
};

struct MatrixEstimate {
  Eigen::MatrixXd estimate;
  Eigen::MatrixXd se;
  double T = 0.0;
  double Tb = 0.0;
  int replicas = 0;
};

struct MixingFit {
  double rate = 0.0;       // fitted decay rate of E|v1 - v2|_H
  double prefactor = 0.0;  // exp(intercept)
  double r2 = 0.0;
  std::vector<double> times;
  std::vector<double> mean_diff;
};

// Common knobs for the frozen-fast time-average estimators. Tb < 0 selects
// the default burn-in 5 / spectral gap.
struct ErgodicParams {
  double T = 100.0;
  double Tb = -1.0;
  double dt = 1e-3;
  int replicas = 8;
  int grid_size = 0;  // 0: 2N
  int jobs = 1;
};

double default_burn_in(const ModelSpec& model);

using Functional = std::function<double(const Eigen::VectorXd&)>;

// Windowed trapezoid time average (1/T) int_{Tb}^{Tb+T} phi(v(s)) ds of the
// frozen fast process started at y, replicated over independent streams.
EstimatorStats ergodic_average(const ModelSpec& model, const FieldCoeffs& x,
                               const FieldCoeffs& y, const Functional& phi,
                               const ErgodicParams& params, const StreamKey& key);

// Time-average estimate of int |z|_H^p mu^x(dz), p in {2, 4}.
EstimatorStats invariant_moments(const ModelSpec& model, const FieldCoeffs& x,
                                 int p, const ErgodicParams& params,
                                 const StreamKey& key);

// Couples two frozen-fast paths on identical noise and fits
// log E|v^{x,y1}(t) - v^{x,y2}(t)|_H against t.
MixingFit estimate_mixing(const ModelSpec& model, const FieldCoeffs& x,
                          const FieldCoeffs& y1, const FieldCoeffs& y2,
                          double T, double dt, int replicas,
                          const StreamKey& key, int jobs = 1);

// Mode projections of the averaged drift at x: time average of B1(x, v(s)).
VectorEstimate estimate_bbar(const ModelSpec& model, const FieldCoeffs& x,
                             const ErgodicParams& params, const StreamKey& key);

// Gram matrix of the averaged diffusion on the weighted modes:
// S_hk = time average of <G1(x,v) Q1 e_h, G1(x,v) Q1 e_k>_H, symmetrized.
MatrixEstimate estimate_S(const ModelSpec& model, const FieldCoeffs& x,
                          const ErgodicParams& params, const StreamKey& key);

// Symmetric PSD square root by eigendecomposition. Eigenvalues in
// [-rel_tol * ||S||, 0) are clipped to zero; anything lower throws.
Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& S, double rel_tol = 1e-8);

struct LipschitzProbe {
  struct Pair {
    int i = 0, j = 0;
    double quotient = 0.0;
    double se = 0.0;
  };
  std::vector<Pair> pairs;
  double max_quotient = 0.0;
};

// Pairwise quotients |bbar(x_i) - bbar(x_j)| / |x_i - x_j| over the anchors.
// Report-only; requires a passed contraction gate.
LipschitzProbe bbar_lipschitz_probe(const ModelSpec& model,
                                    const ConditionM0Report& gate,
                                    const std::vector<FieldCoeffs>& anchors,
                                    const ErgodicParams& params,
                                    const StreamKey& key);

// Closed-form averaged coefficients (throws when the catalog entry has none).
AveragedCoeffs make_analytic_averaged(const ModelSpec& model);

// Estimator-backed averaged coefficients. The drift is reconstructed as a
// linear operator from per-mode anchor estimates (valid on the linear
// catalog); the diffusion factor uses the exact formula when g1 does not
// depend on the fast variable and piecewise-constant anchored estimates
// otherwise.
AveragedCoeffs make_estimated_averaged(const ModelSpec& model,
                                       const ErgodicParams& params,
                                       const std::vector<FieldCoeffs>& gbar_anchors,
                                       const StreamKey& key);

// Evaluator x -> bbar(x) running the estimator on demand with a cache keyed
// by the coefficient bytes of x.
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> make_cached_bbar(
    const ModelSpec& model, const ErgodicParams& params, const StreamKey& key);

}  // namespace twoscale
