#include "twoscale/hypothesis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace twoscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Partial sum of a_k = term(k), k = 1..N, with a tail estimate from the local
// power-law exponent of the last two terms.
template <typename Term>
SeriesCheck check_series(int n, Term term) {
  SeriesCheck s;
  double last = 0.0, prev = 0.0;
  for (int k = 1; k <= n; ++k) {
    prev = last;
    last = term(k);
    s.partial_sum += last;
  }
  if (n < 2 || last <= 0.0) {
    // Finitely many nonzero terms as sampled; nothing left to bound.
    s.decay_exponent = kInf;
    s.tail_bound = 0.0;
    s.converges = true;
    return s;
  }
  const double ratio = last / prev;
  const double p = -std::log(ratio) / std::log(double(n) / double(n - 1));
  s.decay_exponent = p;
  if (p > 1.0) {
    s.tail_bound = last * n / (p - 1.0);
    s.converges = true;
  } else {
    s.tail_bound = kInf;
    s.converges = false;
  }
  return s;
}

BasisConditions check_one(const SpectralBasis& b, double beta, double rho) {
  if (!(beta > 0.0))
    throw std::invalid_argument("check_hypothesis_h1: beta must be > 0");
  if (!(rho > 2.0))
    throw std::invalid_argument("check_hypothesis_h1: rho must be in (2, inf]");

  BasisConditions c;
  c.beta = beta;
  c.rho = rho;

  if (std::isinf(rho)) {
    // sup_k lambda_k |e_k|_0 < infinity; the partial "sum" is the sup itself.
    double sup = 0.0;
    for (int k = 0; k < b.mode_count; ++k)
      sup = std::max(sup, b.noise_amps[k] * b.sup_bounds[k]);
    c.kappa.partial_sum = sup;
    c.kappa.tail_bound = 0.0;
    c.kappa.decay_exponent = kInf;
    c.kappa.converges = std::isfinite(sup);
  } else {
    c.kappa = check_series(b.mode_count, [&](int k) {
      const double l = b.noise_amps[k - 1];
      const double e = b.sup_bounds[k - 1];
      return std::pow(l, rho) * e * e;
    });
  }
  c.zeta = check_series(b.mode_count, [&](int k) {
    const double a = b.eigenvalues[k - 1];
    const double e = b.sup_bounds[k - 1];
    return std::pow(a, -beta) * e * e;
  });

  const double expo = std::isinf(rho) ? beta : beta * (rho - 2.0) / rho;
  c.exponent_ok = expo < 1.0;
  c.kappa_ok = c.kappa.converges;
  c.zeta_ok = c.zeta.converges;
  return c;
}

nlohmann::json series_json(const SeriesCheck& s) {
  return {{"partial_sum", s.partial_sum},
          {"tail_bound", std::isfinite(s.tail_bound) ? s.tail_bound : -1.0},
          {"decay_exponent",
           std::isfinite(s.decay_exponent) ? s.decay_exponent : -1.0},
          {"converges", s.converges}};
}

nlohmann::json conditions_json(const BasisConditions& c) {
  nlohmann::json j;
  j["beta"] = c.beta;
  j["rho"] = std::isinf(c.rho) ? nlohmann::json("inf") : nlohmann::json(c.rho);
  j["kappa"] = series_json(c.kappa);
  j["zeta"] = series_json(c.zeta);
  j["flags"] = {{"kappa_ok", c.kappa_ok},
                {"zeta_ok", c.zeta_ok},
                {"exponent_ok", c.exponent_ok}};
  return j;
}

}  // namespace

nlohmann::json HypothesisReport::to_json() const {
  nlohmann::json j;
  j["slow"] = conditions_json(slow);
  j["fast"] = conditions_json(fast);
  j["lambda_gap"] = lambda_gap;
  j["flags"] = {{"gap_positive", gap_positive},
                {"spectral_pass", spectral_pass()}};
  if (L_b2) j["L_b2"] = *L_b2;
  if (lb2_ok) j["flags"]["lb2_lt_gap"] = *lb2_ok;
  if (m0) j["m0"] = *m0;
  if (m0_ok) j["flags"]["m0_ok"] = *m0_ok;
  return j;
}

HypothesisReport check_hypothesis_h1(const SpectralBasis& slow,
                                     const SpectralBasis& fast,
                                     double beta_slow, double beta_fast,
                                     double rho_slow, double rho_fast) {
  HypothesisReport r;
  r.slow = check_one(slow, beta_slow, rho_slow);
  r.fast = check_one(fast, beta_fast, rho_fast);
  r.lambda_gap = fast.spectral_gap();
  r.gap_positive = r.lambda_gap > 0.0;
  return r;
}

}  // namespace twoscale
