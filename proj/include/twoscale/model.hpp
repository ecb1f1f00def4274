#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twoscale/basis.hpp"
#include "twoscale/hypothesis.hpp"

namespace twoscale {

// Pointwise coefficient (xi, sigma1, sigma2) -> value. Must be pure and
// thread-safe; the reaction maps become Nemytskii operators and the g-maps
// multiplication operators.
using PointwiseMap = std::function<double(double, double, double)>;

struct ModelSpec {
  std::string id;
  PointwiseMap b1, b2, g1, g2;

  // Declared constants, verified by sampling in check_hypothesis_h2.
  double L_b2 = 0.0;        // Lipschitz constant of b2 in sigma2
  double L_g2 = 0.0;        // Lipschitz constant of g2 in sigma2
  double gamma = 0.0;       // growth exponent of g2, must be < 1
  double delta = 0.0;       // pointwise lower bound of g1 (0 if none)
  bool g1_depends_on_fast = false;
  bool b1_depends_on_fast = true;

  BasisPtr slow_basis;
  BasisPtr fast_basis;

  // Closed-form averaged coefficients where the catalog entry has them.
  // analytic_bbar maps slow coefficients to averaged-drift coefficients;
  // analytic_gbar is the N x N factor of S in the slow eigenbasis (noise
  // amplitudes folded in). Either may be absent.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> analytic_bbar;
  std::function<Eigen::MatrixXd()> analytic_gbar;

  // Effective per-mode decay rates of the frozen fast equation when the
  // catalog entry is linear in sigma2 (used by estimator defaults).
  double fast_rate_floor() const;
};

enum class CoeffKind { b1, b2, g1, g2 };

// Pointwise application at each collocation point; for the g-maps the result
// is the multiplier field.
GridField nemytskii(const ModelSpec& model, CoeffKind which, const GridField& u,
                    const GridField& v);

struct H2Report {
  double measured_L_b2 = 0.0;
  double measured_L_g2 = 0.0;
  double g2_growth_exponent = 0.0;
  bool lb2_declared_ok = false;   // measured <= declared * 1.01
  bool lg2_declared_ok = false;
  bool growth_ok = false;         // fitted exponent <= gamma + 0.05
  bool lb2_lt_gap = false;        // declared L_b2 < fast spectral gap
  bool gamma_ok = false;          // gamma < 1
  std::vector<std::string> violations;

  bool pass() const {
    return lb2_declared_ok && lg2_declared_ok && growth_ok && lb2_lt_gap &&
           gamma_ok;
  }
  nlohmann::json to_json() const;
};

// Samples Lipschitz quotients of b2 and g2 in sigma2 and the growth of g2,
// against the declared constants. Report-only: violations are listed, not
// thrown. sample_count must be >= 100.
H2Report check_hypothesis_h2(const ModelSpec& model, int sample_count,
                             std::uint64_t rng_seed);

struct ConditionM0Report {
  double m0 = 0.0;
  double drift_term = 0.0;      // (L_b2 / lambda)^2
  double diffusion_term = 0.0;  // L_g2^2 * K2 * (rho2/(lambda (rho2+2)))^{...}
  bool pass = false;            // m0 < 1/2
  // Echoed inputs.
  double lambda = 0.0, beta2 = 0.0, rho2 = 0.0, zeta2 = 0.0, kappa2 = 0.0;
  double L_b2 = 0.0, L_g2 = 0.0;

  nlohmann::json to_json() const;
};

// Contraction constant gating Lipschitz continuity of the averaged
// coefficients. rho2 = inf uses the limit exponents with kappa^0 := 1.
ConditionM0Report check_condition_m0(const ModelSpec& model,
                                     const HypothesisReport& fast_report);

// Catalog. Parameters are entry-specific; unknown parameter keys are
// rejected. Entries:
//   linear_test_model: b1 = p1*s1 + p2*s2, b2 = q1*s1 + q2*s2, g1, g2 const.
//   bistable:          b1 = s1 - s1^3 + s2, rest as linear defaults.
//   additive_fast:     g1 = base + amp*sin(s2) (fast-dependent), g2 = 1.
ModelSpec make_model(const std::string& name, const nlohmann::json& params,
                     const BasisPtr& slow_basis, const BasisPtr& fast_basis);

std::vector<std::string> model_catalog_names();

}  // namespace twoscale
