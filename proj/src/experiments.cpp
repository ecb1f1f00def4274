#include "twoscale/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "twoscale/io_util.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void require_decreasing(const std::vector<double>& eps_list) {
  if (eps_list.empty())
    throw std::invalid_argument("eps_list must not be empty");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("eps_list must be strictly decreasing");
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

double clip(double x, double bound) {
  return std::max(-bound, std::min(bound, x));
}

}  // namespace

DtRule DtRule::parse(const std::string& text) {
  DtRule rule;
  if (text.rfind("eps/", 0) == 0) {
    rule.kind = Kind::eps_fraction;
    rule.value = std::stod(text.substr(4));
    if (!(rule.value > 0.0))
      throw std::invalid_argument("dt rule denominator must be > 0");
    return rule;
  }
  rule.kind = Kind::fixed;
  std::size_t pos = 0;
  rule.value = std::stod(text, &pos);
  if (pos != text.size() || !(rule.value > 0.0))
    throw std::invalid_argument("dt rule must be 'eps/<denom>' or a positive number");
  return rule;
}

std::string DtRule::str() const {
  if (kind == Kind::eps_fraction) return "eps/" + format_double(value);
  return format_double(value);
}

nlohmann::json ModelGate::to_json() const {
  nlohmann::json j;
  j["h1"] = h1.to_json();
  j["h2"] = h2.to_json();
  j["m0"] = m0.to_json();
  j["pass"] = pass;
  return j;
}

ModelGate run_model_gate(const ModelSpec& model, double beta1, double beta2,
                         double rho1, double rho2, int h2_samples,
                         std::uint64_t seed) {
  ModelGate gate;
  gate.h1 = check_hypothesis_h1(*model.slow_basis, *model.fast_basis, beta1,
                                beta2, rho1, rho2);
  gate.h2 = check_hypothesis_h2(model, h2_samples, seed);
  gate.m0 = check_condition_m0(model, gate.h1);
  gate.h1.L_b2 = model.L_b2;
  gate.h1.lb2_ok = gate.h2.lb2_lt_gap;
  gate.h1.m0 = gate.m0.m0;
  gate.h1.m0_ok = gate.m0.pass;
  gate.pass = gate.h1.spectral_pass() && gate.h2.pass() && gate.m0.pass;
  return gate;
}

nlohmann::json ConvergenceResult::verdict() const {
  nlohmann::json j;
  j["coupling"] = coupling;
  j["model"] = model_id;
  j["provenance"] = provenance;
  j["strictly_decreasing"] = strictly_decreasing;
  j["halved"] = halved;
  j["pass"] = strictly_decreasing && (rows.size() < 2 || halved);
  for (const auto& r : rows)
    j["rows"].push_back({{"eps", r.eps},
                         {"mean_sup_error", r.mean_sup_error},
                         {"se", r.se},
                         {"median", r.median},
                         {"runtime_s", r.runtime_s}});
  return j;
}

ConvergenceResult convergence_study(const ModelSpec& model, const ModelGate& gate,
                                    const AveragedCoeffs& avg,
                                    const FieldCoeffs& x, const FieldCoeffs& y,
                                    const std::vector<double>& eps_list, double T,
                                    const DtRule& dt_rule, int replicas,
                                    const StreamKey& key, int jobs) {
  require_decreasing(eps_list);
  if (!gate.pass)
    throw GateFailure("convergence_study: model failed the validity gate");
  if (model.g1_depends_on_fast)
    throw GateFailure(
        "convergence_study: pathwise coupling requires g1 independent of the "
        "fast variable");

  const int grid = default_grid_size(model);
  ConvergenceResult result;
  result.model_id = model.id;
  result.provenance =
      avg.provenance == AveragedCoeffs::Provenance::analytic ? "analytic"
                                                             : "estimated";

  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const double dt = dt_rule.dt_for(eps);
    if (dt > eps / 10.0 + 1e-15)
      throw std::invalid_argument("convergence_study: dt rule exceeds eps/10");
    const double t0 = now_seconds();
    std::vector<double> sup_err(replicas, 0.0);
    const StreamKey ek = key.with_eps_index(static_cast<std::uint32_t>(e));

    parallel_for(jobs, replicas, [&](int r) {
      const StreamKey rk = ek.with_replica(static_cast<std::uint32_t>(r));
      std::vector<Eigen::VectorXd> u_path;
      u_path.reserve(static_cast<std::size_t>(T / dt) + 2);
      run_coupled(model, x, y, eps, T, dt, rk.with(Channel::slow_noise),
                  rk.with(Channel::fast_noise), grid, false,
                  [&](int, double, const Eigen::VectorXd& u,
                      const Eigen::VectorXd&) { u_path.push_back(u); });
      double sup = 0.0;
      run_averaged(avg, model.slow_basis, x, T, dt, rk.with(Channel::slow_noise),
                   [&](int i, double, const Eigen::VectorXd& ubar) {
                     sup = std::max(sup, (u_path[i] - ubar).norm());
                   });
      sup_err[r] = sup;
    });

    ConvergenceRow row;
    row.eps = eps;
    row.replicas = replicas;
    row.mean_sup_error = mean_of(sup_err);
    row.se = se_of(sup_err, row.mean_sup_error);
    row.median = median_of(sup_err);
    row.runtime_s = now_seconds() - t0;
    result.rows.push_back(row);
  }

  std::vector<double> means;
  for (const auto& r : result.rows) means.push_back(r.mean_sup_error);
  result.strictly_decreasing = strictly_decreasing(means);
  result.halved =
      means.size() < 2 || means.back() < 0.5 * means.front();
  return result;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    const double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / n - double(j) / m));
  }
  KsResult r;
  r.stat = d;
  const double en = std::sqrt(double(n) * double(m) / double(n + m));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lam * lam);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  r.pvalue = std::clamp(p, 0.0, 1.0);
  return r;
}

nlohmann::json WeakProbeResult::verdict() const {
  nlohmann::json j;
  j["ks_decreasing"] = ks_decreasing;
  j["mean_decreasing"] = mean_decreasing;
  j["pass"] = ks_decreasing && mean_decreasing;
  for (const auto& r : rows)
    j["rows"].push_back({{"eps", r.eps},
                         {"ks_stat", r.ks_stat},
                         {"ks_pvalue", r.ks_pvalue},
                         {"mean_diff_mode1", r.mean_diff_mode1},
                         {"mean_diff_norm", r.mean_diff_norm},
                         {"runtime_s", r.runtime_s}});
  return j;
}

WeakProbeResult weak_convergence_probe(const ModelSpec& model,
                                       const ModelGate& gate,
                                       const AveragedCoeffs& avg,
                                       const FieldCoeffs& x, const FieldCoeffs& y,
                                       const std::vector<double>& eps_list,
                                       double T, const DtRule& dt_rule,
                                       double avg_dt, double clip_bound,
                                       int replicas, const StreamKey& key,
                                       int jobs) {
  require_decreasing(eps_list);
  if (!gate.pass)
    throw GateFailure("weak_convergence_probe: model failed the validity gate");

  const int grid = default_grid_size(model);

  // One shared averaged-sample set, independent noise (eps_index 9999).
  std::vector<double> bar_mode1(replicas), bar_norm(replicas);
  {
    const StreamKey ak = key.with_eps_index(9999);
    parallel_for(jobs, replicas, [&](int r) {
      Eigen::VectorXd last;
      run_averaged(avg, model.slow_basis, x, T, avg_dt,
                   ak.with_replica(r).with(Channel::slow_noise),
                   [&](int, double, const Eigen::VectorXd& u) { last = u; });
      bar_mode1[r] = last[0];
      bar_norm[r] = last.norm();
    });
  }
  const double bar_mean_mode1 = mean_of([&] {
    std::vector<double> c(replicas);
    for (int r = 0; r < replicas; ++r) c[r] = clip(bar_mode1[r], clip_bound);
    return c;
  }());
  const double bar_mean_norm = mean_of([&] {
    std::vector<double> c(replicas);
    for (int r = 0; r < replicas; ++r) c[r] = clip(bar_norm[r], clip_bound);
    return c;
  }());

  WeakProbeResult result;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const double dt = dt_rule.dt_for(eps);
    const double t0 = now_seconds();
    std::vector<double> mode1(replicas), norm(replicas);
    const StreamKey ek = key.with_eps_index(static_cast<std::uint32_t>(e));
    parallel_for(jobs, replicas, [&](int r) {
      const StreamKey rk = ek.with_replica(static_cast<std::uint32_t>(r));
      Eigen::VectorXd last;
      run_coupled(model, x, y, eps, T, dt, rk.with(Channel::slow_noise),
                  rk.with(Channel::fast_noise), grid, false,
                  [&](int, double, const Eigen::VectorXd& u,
                      const Eigen::VectorXd&) { last = u; });
      mode1[r] = last[0];
      norm[r] = last.norm();
    });

    WeakProbeRow row;
    row.eps = eps;
    std::vector<double> cm(replicas), cn(replicas);
    for (int r = 0; r < replicas; ++r) {
      cm[r] = clip(mode1[r], clip_bound);
      cn[r] = clip(norm[r], clip_bound);
    }
    row.mean_diff_mode1 = std::abs(mean_of(cm) - bar_mean_mode1);
    row.mean_diff_norm = std::abs(mean_of(cn) - bar_mean_norm);
    const KsResult ks = ks_two_sample(mode1, bar_mode1);
    row.ks_stat = ks.stat;
    row.ks_pvalue = ks.pvalue;
    row.runtime_s = now_seconds() - t0;
    result.rows.push_back(row);
  }

  std::vector<double> kss, mds;
  for (const auto& r : result.rows) {
    kss.push_back(r.ks_stat);
    mds.push_back(r.mean_diff_mode1);
  }
  result.ks_decreasing = strictly_decreasing(kss);
  result.mean_decreasing = strictly_decreasing(mds);
  return result;
}

nlohmann::json BoundReport::verdict() const {
  nlohmann::json j;
  j["pass"] = pass;
  for (const auto& r : rows) {
    nlohmann::json row;
    row["quantity"] = r.quantity;
    row["p"] = r.p;
    row["per_eps"] = r.per_eps;
    row["ratio"] = r.ratio;
    row["pass"] = r.pass;
    j["rows"].push_back(row);
  }
  return j;
}

BoundReport moment_bound_study(const ModelSpec& model, const FieldCoeffs& x,
                               const FieldCoeffs& y,
                               const std::vector<double>& eps_list,
                               const std::vector<int>& p_list, double T,
                               const DtRule& dt_rule, int replicas,
                               const StreamKey& key, int jobs) {
  require_decreasing(eps_list);
  for (int p : p_list)
    if (p != 2 && p != 4)
      throw std::invalid_argument("moment_bound_study: p must be 2 or 4");

  const int grid = default_grid_size(model);
  // quantities: per p, E sup|u|^p and int E|v|^p; plus sup_t E|v|^2.
  std::vector<std::vector<double>> sup_u(p_list.size()),
      int_v(p_list.size());
  std::vector<double> sup_mean_v2;

  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const double dt = dt_rule.dt_for(eps);
    const long long n = std::llround(T / dt);
    const StreamKey ek = key.with_eps_index(static_cast<std::uint32_t>(e));

    std::vector<std::vector<double>> rep_sup_u(p_list.size(),
                                               std::vector<double>(replicas)),
        rep_int_v(p_list.size(), std::vector<double>(replicas));
    std::vector<std::vector<double>> v2_series(replicas);

    parallel_for(jobs, replicas, [&](int r) {
      const StreamKey rk = ek.with_replica(static_cast<std::uint32_t>(r));
      std::vector<double> supu(p_list.size(), 0.0), intv(p_list.size(), 0.0);
      auto& v2 = v2_series[r];
      v2.resize(n + 1);
      run_coupled(model, x, y, eps, T, dt, rk.with(Channel::slow_noise),
                  rk.with(Channel::fast_noise), grid, false,
                  [&](int i, double, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v) {
                    const double u2 = u.squaredNorm();
                    const double vsq = v.squaredNorm();
                    v2[i] = vsq;
                    const double tw = (i == 0 || i == n) ? 0.5 * dt : dt;
                    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
                      const double pu = p_list[pi] == 2 ? u2 : u2 * u2;
                      const double pv = p_list[pi] == 2 ? vsq : vsq * vsq;
                      supu[pi] = std::max(supu[pi], pu);
                      intv[pi] += tw * pv;
                    }
                  });
      for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        rep_sup_u[pi][r] = supu[pi];
        rep_int_v[pi][r] = intv[pi];
      }
    });

    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
      sup_u[pi].push_back(mean_of(rep_sup_u[pi]));
      int_v[pi].push_back(mean_of(rep_int_v[pi]));
    }
    double sup_m = 0.0;
    for (long long i = 0; i <= n; ++i) {
      double m = 0.0;
      for (int r = 0; r < replicas; ++r) m += v2_series[r][i];
      sup_m = std::max(sup_m, m / replicas);
    }
    sup_mean_v2.push_back(sup_m);
  }

  BoundReport report;
  report.eps_list = eps_list;
  auto add_row = [&](const std::string& name, int p, std::vector<double> vals) {
    BoundRow row;
    row.quantity = name;
    row.p = p;
    row.per_eps = std::move(vals);
    double lo = row.per_eps[0], hi = row.per_eps[0];
    bool finite = true;
    for (double v : row.per_eps) {
      finite = finite && std::isfinite(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    row.ratio = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    row.pass = finite && row.ratio <= 5.0;
    report.rows.push_back(row);
  };
  for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
    add_row("sup_u_moment", p_list[pi], sup_u[pi]);
    add_row("int_v_moment", p_list[pi], int_v[pi]);
  }
  add_row("sup_mean_v2", 2, sup_mean_v2);
  report.pass = true;
  for (const auto& r : report.rows) report.pass = report.pass && r.pass;
  return report;
}

nlohmann::json HolderReport::verdict() const {
  nlohmann::json j;
  j["spread"] = spread;
  j["pass"] = pass;
  for (const auto& r : rows) {
    j["exponents"].push_back({{"eps", r.eps}, {"exponent", r.exponent}});
  }
  return j;
}

HolderReport holder_increment_study(const ModelSpec& model, const FieldCoeffs& x,
                                    const FieldCoeffs& y,
                                    const std::vector<double>& eps_list,
                                    const std::vector<double>& h_list, double T,
                                    const DtRule& dt_rule, int replicas,
                                    const StreamKey& key, int jobs) {
  require_decreasing(eps_list);
  if (h_list.empty()) throw std::invalid_argument("h_list must not be empty");
  for (double h : h_list)
    if (!(h > 0.0) || h > 1.0)
      throw std::invalid_argument("h_list entries must lie in (0, 1]");

  const int grid = default_grid_size(model);
  const double t0_frac = 0.5;
  HolderReport report;
  report.h_list = h_list;

  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const double dt = dt_rule.dt_for(eps);
    const long long i_base = std::llround(t0_frac * T / dt);
    std::vector<long long> i_h;
    for (double h : h_list) {
      const long long steps = std::llround(h / dt);
      if (std::abs(steps * dt - h) > 1e-9)
        throw std::invalid_argument("holder_increment_study: h not grid-aligned");
      i_h.push_back(i_base + steps);
    }
    const long long i_max = *std::max_element(i_h.begin(), i_h.end());
    const double t_run = i_max * dt;

    std::vector<std::vector<double>> sq(h_list.size(),
                                        std::vector<double>(replicas, 0.0));
    const StreamKey ek = key.with_eps_index(static_cast<std::uint32_t>(e));
    parallel_for(jobs, replicas, [&](int r) {
      const StreamKey rk = ek.with_replica(static_cast<std::uint32_t>(r));
      Eigen::VectorXd u_base;
      run_coupled(model, x, y, eps, t_run, dt, rk.with(Channel::slow_noise),
                  rk.with(Channel::fast_noise), grid, false,
                  [&](int i, double, const Eigen::VectorXd& u,
                      const Eigen::VectorXd&) {
                    if (i == i_base) u_base = u;
                    for (std::size_t hi = 0; hi < i_h.size(); ++hi)
                      if (i == i_h[hi])
                        sq[hi][r] = (u - u_base).squaredNorm();
                  });
    });

    HolderRow row;
    row.eps = eps;
    std::vector<double> logh, logm;
    for (std::size_t hi = 0; hi < h_list.size(); ++hi) {
      const double m = mean_of(sq[hi]);
      row.mean_sq_increment.push_back(m);
      logh.push_back(std::log(h_list[hi]));
      logm.push_back(std::log(std::max(m, 1e-300)));
    }
    row.exponent = fit_line(logh, logm).slope;
    report.rows.push_back(row);
  }

  double lo = report.rows[0].exponent, hi = lo;
  bool positive = true;
  for (const auto& r : report.rows) {
    lo = std::min(lo, r.exponent);
    hi = std::max(hi, r.exponent);
    positive = positive && r.exponent > 0.0;
  }
  report.spread = hi - lo;
  report.pass = positive && report.spread <= 0.3;
  return report;
}

nlohmann::json EpsSeriesResult::verdict(const std::string& name) const {
  nlohmann::json j;
  j["study"] = name;
  j["decreasing"] = decreasing;
  j["pass"] = decreasing;
  for (const auto& r : rows)
    j["estimates"].push_back({{"eps", r.eps}, {"estimate", r.estimate}, {"se", r.se}});
  return j;
}

EpsSeriesResult remainder_study(
    const ModelSpec& model,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& bbar,
    const FieldCoeffs& h, const FieldCoeffs& x, const FieldCoeffs& y,
    const std::vector<double>& eps_list, double kappa1, double kappa2, double T,
    const DtRule& dt_rule, int replicas, const StreamKey& key, int jobs) {
  require_decreasing(eps_list);
  const int grid = default_grid_size(model);

  EpsSeriesResult result;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    const double dt = dt_rule.dt_for(eps);
    const PartitionPlan plan = build_partition(eps, kappa1, kappa2, T);
    std::vector<double> sup_r(replicas, 0.0);
    const StreamKey ek = key.with_eps_index(static_cast<std::uint32_t>(e));

    parallel_for(jobs, replicas, [&](int r) {
      const StreamKey rk = ek.with_replica(static_cast<std::uint32_t>(r));
      const Trajectory traj =
          simulate_coupled(model, x, y, eps, T, dt, rk.with(Channel::slow_noise),
                           rk.with(Channel::fast_noise), grid);
      const std::vector<double> rem = remainder_path(model, traj, bbar, h);
      double sup = 0.0;
      for (double v : rem) sup = std::max(sup, std::abs(v));
      sup_r[r] = sup;
    });

    EpsSeriesRow row;
    row.eps = eps;
    row.delta_eps = plan.delta_eps;
    row.zeta_eps = plan.zeta_eps;
    row.estimate = mean_of(sup_r);
    row.se = se_of(sup_r, row.estimate);
    row.replicas = replicas;
    result.rows.push_back(row);
  }
  std::vector<double> est;
  for (const auto& r : result.rows) est.push_back(r.estimate);
  result.decreasing = strictly_decreasing(est);
  return result;
}

EpsSeriesResult gap_study(const ModelSpec& model, const AveragedCoeffs& avg,
                          const CylindricalFn& phi, const FieldCoeffs& x,
                          const FieldCoeffs& y,
                          const std::vector<double>& eps_list, double kappa1,
                          double kappa2, const GapParams& base,
                          const DtRule& dt_rule, const StreamKey& key, int jobs) {
  require_decreasing(eps_list);

  EpsSeriesResult result;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    GapParams params = base;
    params.dt = dt_rule.dt_for(eps);
    params.jobs = jobs;
    const PartitionPlan plan =
        build_partition(eps, kappa1, kappa2, std::max(base.t2, 1.0));
    const EstimatorStats stats =
        kolmogorov_gap(model, avg, phi, x, y, eps, params,
                       key.with_eps_index(static_cast<std::uint32_t>(e)));
    EpsSeriesRow row;
    row.eps = eps;
    row.delta_eps = plan.delta_eps;
    row.zeta_eps = plan.zeta_eps;
    row.estimate = stats.estimate;
    row.se = stats.se;
    row.replicas = params.outer_replicas;
    result.rows.push_back(row);
  }
  std::vector<double> est;
  for (const auto& r : result.rows) est.push_back(r.estimate);
  result.decreasing = strictly_decreasing(est);
  return result;
}

// Runtimes live in the verdict JSON so re-runs with one (config, seed) hash
// to identical CSV bytes.
void write_convergence_csv(const ConvergenceResult& r, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"eps", "replicas", "mean_sup_error", "se", "median"});
  for (const auto& row : r.rows)
    csv.row_values({row.eps, double(row.replicas), row.mean_sup_error, row.se,
                    row.median});
}

void write_weak_probe_csv(const WeakProbeResult& r, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"eps", "mean_diff_mode1", "mean_diff_norm", "ks_stat", "ks_pvalue"});
  for (const auto& row : r.rows)
    csv.row_values({row.eps, row.mean_diff_mode1, row.mean_diff_norm,
                    row.ks_stat, row.ks_pvalue});
}

void write_bound_csv(const BoundReport& r, const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> head{"quantity", "p"};
  for (double e : r.eps_list) head.push_back("eps_" + format_double(e));
  head.push_back("ratio");
  head.push_back("pass");
  csv.header(head);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells{row.quantity, std::to_string(row.p)};
    for (double v : row.per_eps) cells.push_back(format_double(v));
    cells.push_back(format_double(row.ratio));
    cells.push_back(row.pass ? "1" : "0");
    csv.row(cells);
  }
}

void write_holder_csv(const HolderReport& r, const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> head{"eps"};
  for (double h : r.h_list) head.push_back("msq_h_" + format_double(h));
  head.push_back("exponent");
  csv.header(head);
  for (const auto& row : r.rows) {
    std::vector<double> cells{row.eps};
    for (double v : row.mean_sq_increment) cells.push_back(v);
    cells.push_back(row.exponent);
    csv.row_values(cells);
  }
}

void write_eps_series_csv(const EpsSeriesResult& r, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"eps", "delta_eps", "zeta_eps", "estimate", "se", "replicas"});
  for (const auto& row : r.rows)
    csv.row_values({row.eps, row.delta_eps, row.zeta_eps, row.estimate, row.se,
                    double(row.replicas)});
}

}  // namespace twoscale
