#pragma once

#include <optional>

#include <json.hpp>

#include "twoscale/basis.hpp"

namespace twoscale {

// Truncated series sum_k a_k with a power-law tail estimate fitted from the
// last two terms: a_k ~ k^{-p} gives tail <= a_N * N / (p - 1) for p > 1.
struct SeriesCheck {
  double partial_sum = 0.0;
  double tail_bound = 0.0;      // +inf when the fitted exponent is <= 1
  double decay_exponent = 0.0;  // fitted p
  bool converges = false;

  double total() const { return partial_sum + tail_bound; }
};

// Spectral summability data for one basis: kappa = sum lambda_k^rho |e_k|_0^2
// (for rho = inf, the sup-norm convention sup_k lambda_k |e_k|_0) and
// zeta = sum alpha_k^{-beta} |e_k|_0^2, plus the exponent condition
// beta (rho - 2) / rho < 1.
struct BasisConditions {
  double beta = 0.0;
  double rho = 0.0;  // may be +inf
  SeriesCheck kappa;
  SeriesCheck zeta;
  bool kappa_ok = false;
  bool zeta_ok = false;
  bool exponent_ok = false;  // beta (rho - 2) / rho < 1

  // kappa value used by downstream contraction arithmetic.
  double kappa_value() const { return kappa.total(); }
  double zeta_value() const { return zeta.total(); }
};

struct HypothesisReport {
  BasisConditions slow;
  BasisConditions fast;
  double lambda_gap = 0.0;  // inf_k alpha_{fast,k}
  bool gap_positive = false;

  // Filled by the model-level checks when the full gate runs.
  std::optional<double> L_b2;
  std::optional<bool> lb2_ok;  // L_b2 < lambda_gap
  std::optional<double> m0;
  std::optional<bool> m0_ok;   // m0 < 1/2

  bool spectral_pass() const {
    return slow.kappa_ok && slow.zeta_ok && slow.exponent_ok && fast.kappa_ok &&
           fast.zeta_ok && fast.exponent_ok && gap_positive;
  }

  nlohmann::json to_json() const;
};

// Validity report for the spectral assumptions on (A_i, Q_i). rho_i may be
// +inf (white-noise convention); rho_i <= 2 is rejected.
HypothesisReport check_hypothesis_h1(const SpectralBasis& slow,
                                     const SpectralBasis& fast,
                                     double beta_slow, double beta_fast,
                                     double rho_slow, double rho_fast);

}  // namespace twoscale
