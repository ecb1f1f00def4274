#pragma once

#include <string>
#include <vector>

#include "twoscale/khasminskii.hpp"

namespace twoscale {

// Raised by studies whose model failed the validity gate.
struct GateFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time-step rule: either dt = eps / denom or a fixed dt.
struct DtRule {
  enum class Kind { eps_fraction, fixed };
  Kind kind = Kind::eps_fraction;
  double value = 10.0;  // denom for eps_fraction, dt for fixed

  double dt_for(double eps) const {
    return kind == Kind::eps_fraction ? eps / value : value;
  }
  static DtRule parse(const std::string& text);
  std::string str() const;
};

// Combined validity gate: spectral conditions, sampled coefficient
// conditions, and the contraction constant.
struct ModelGate {
  HypothesisReport h1;
  H2Report h2;
  ConditionM0Report m0;
  bool pass = false;

  nlohmann::json to_json() const;
};

ModelGate run_model_gate(const ModelSpec& model, double beta1, double beta2,
                         double rho1, double rho2, int h2_samples,
                         std::uint64_t seed);

struct ConvergenceRow {
  double eps = 0.0;
  int replicas = 0;
  double mean_sup_error = 0.0;
  double se = 0.0;
  double median = 0.0;
  double runtime_s = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;  // sorted by decreasing eps
  std::string coupling = "common-noise";
  std::string model_id;
  std::string provenance;  // analytic | estimated
  bool strictly_decreasing = false;
  bool halved = false;  // last mean below 0.5 x first mean

  nlohmann::json verdict() const;
};

// Pathwise sup error between the coupled slow component and the averaged
// solution under common-noise coupling, per epsilon.
ConvergenceResult convergence_study(const ModelSpec& model, const ModelGate& gate,
                                    const AveragedCoeffs& avg,
                                    const FieldCoeffs& x, const FieldCoeffs& y,
                                    const std::vector<double>& eps_list, double T,
                                    const DtRule& dt_rule, int replicas,
                                    const StreamKey& key, int jobs);

struct WeakProbeRow {
  double eps = 0.0;
  double mean_diff_mode1 = 0.0;  // |E clip<u(T),e1> - E clip<ubar(T),e1>|
  double mean_diff_norm = 0.0;   // same for clip|u(T)|_H
  double ks_stat = 0.0;
  double ks_pvalue = 0.0;
  double runtime_s = 0.0;
};

struct WeakProbeResult {
  std::vector<WeakProbeRow> rows;
  bool ks_decreasing = false;
  bool mean_decreasing = false;
  nlohmann::json verdict() const;
};

// Independent-noise distributional comparison of u_eps(T) against ubar(T):
// clipped mean functionals and a two-sample Kolmogorov-Smirnov statistic on
// the first mode pairing.
WeakProbeResult weak_convergence_probe(const ModelSpec& model,
                                       const ModelGate& gate,
                                       const AveragedCoeffs& avg,
                                       const FieldCoeffs& x, const FieldCoeffs& y,
                                       const std::vector<double>& eps_list,
                                       double T, const DtRule& dt_rule,
                                       double avg_dt, double clip_bound,
                                       int replicas, const StreamKey& key,
                                       int jobs);

struct BoundRow {
  std::string quantity;
  int p = 0;
  std::vector<double> per_eps;
  double ratio = 0.0;  // max / min over eps
  bool pass = false;   // finite and ratio <= 5
};

struct BoundReport {
  std::vector<BoundRow> rows;
  std::vector<double> eps_list;
  bool pass = false;
  nlohmann::json verdict() const;
};

// Stability of E sup_t |u|^p, int_0^T E|v|^p dt and sup_t E|v|^2 across eps.
BoundReport moment_bound_study(const ModelSpec& model, const FieldCoeffs& x,
                               const FieldCoeffs& y,
                               const std::vector<double>& eps_list,
                               const std::vector<int>& p_list, double T,
                               const DtRule& dt_rule, int replicas,
                               const StreamKey& key, int jobs);

struct HolderRow {
  double eps = 0.0;
  double exponent = 0.0;  // fitted slope of log E|u(t+h)-u(t)|^2 vs log h
  std::vector<double> mean_sq_increment;  // per h
};

struct HolderReport {
  std::vector<HolderRow> rows;
  std::vector<double> h_list;
  double spread = 0.0;
  bool pass = false;  // exponents positive, spread <= 0.3
  nlohmann::json verdict() const;
};

// Time-increment regularity of the slow component at t = T/2.
HolderReport holder_increment_study(const ModelSpec& model, const FieldCoeffs& x,
                                    const FieldCoeffs& y,
                                    const std::vector<double>& eps_list,
                                    const std::vector<double>& h_list, double T,
                                    const DtRule& dt_rule, int replicas,
                                    const StreamKey& key, int jobs);

struct EpsSeriesRow {
  double eps = 0.0;
  double delta_eps = 0.0;
  double zeta_eps = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  int replicas = 0;
};

struct EpsSeriesResult {
  std::vector<EpsSeriesRow> rows;
  bool decreasing = false;
  nlohmann::json verdict(const std::string& name) const;
};

// E sup_{t<=T} |R_eps(t)| per epsilon (remainder of the averaged pairing).
EpsSeriesResult remainder_study(
    const ModelSpec& model,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& bbar,
    const FieldCoeffs& h, const FieldCoeffs& x, const FieldCoeffs& y,
    const std::vector<double>& eps_list, double kappa1, double kappa2, double T,
    const DtRule& dt_rule, int replicas, const StreamKey& key, int jobs);

// Kolmogorov-operator gap per epsilon.
EpsSeriesResult gap_study(const ModelSpec& model, const AveragedCoeffs& avg,
                          const CylindricalFn& phi, const FieldCoeffs& x,
                          const FieldCoeffs& y,
                          const std::vector<double>& eps_list, double kappa1,
                          double kappa2, const GapParams& base,
                          const DtRule& dt_rule, const StreamKey& key, int jobs);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double stat = 0.0;
  double pvalue = 0.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// CSV writers for the run directory.
void write_convergence_csv(const ConvergenceResult& r, const std::string& path);
void write_weak_probe_csv(const WeakProbeResult& r, const std::string& path);
void write_bound_csv(const BoundReport& r, const std::string& path);
void write_holder_csv(const HolderReport& r, const std::string& path);
void write_eps_series_csv(const EpsSeriesResult& r, const std::string& path);

}  // namespace twoscale
