#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twoscale/experiments.hpp"
#include "twoscale/io_util.hpp"
#include "twoscale/run_config.hpp"

namespace {

using namespace twoscale;

struct CliOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  int jobs = 0;
  std::string out;
};

RunConfig load_config(const CliOptions& opt, const std::string& study) {
  nlohmann::json raw = nlohmann::json::object();
  if (!opt.config_path.empty()) raw = read_json_file(opt.config_path);
  for (const auto& ov : opt.overrides) apply_override(raw, ov);
  raw["study"] = study;
  RunConfig cfg = RunConfig::from_json(raw);
  if (opt.seed >= 0) cfg.set_seed(static_cast<std::uint64_t>(opt.seed));
  if (opt.jobs > 0) cfg.set_jobs(opt.jobs);
  if (!opt.out.empty()) cfg.set_out(opt.out);
  return cfg;
}

std::uint32_t study_id(const std::string& study) {
  const std::vector<std::string> names{"check",    "simulate", "fast",
                                       "estimate", "remainder", "gap",
                                       "converge", "moments",   "holder"};
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == study) return static_cast<std::uint32_t>(i + 1);
  return 0;
}

StreamKey root_key(const RunConfig& cfg) {
  StreamKey key;
  key.seed = cfg.seed();
  key.study = study_id(cfg.study());
  return key;
}

void write_verdict(const RunConfig& cfg, const nlohmann::json& verdict) {
  write_json_file(verdict, cfg.out_dir() + "/verdict.json");
}

ModelGate gate_of(const RunConfig& cfg, const ModelSpec& model) {
  return run_model_gate(model, cfg.beta1(), cfg.beta2(), cfg.rho1(), cfg.rho2(),
                        cfg.h2_samples(), cfg.seed());
}

int run_check(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const ModelGate gate = gate_of(cfg, model);
  write_json_file(gate.to_json(), cfg.out_dir() + "/check_report.json");
  nlohmann::json v;
  v["pass"] = gate.pass;
  v["m0"] = gate.m0.m0;
  write_verdict(cfg, v);
  std::cout << "check: " << (gate.pass ? "pass" : "fail")
            << "  m0 = " << gate.m0.m0 << "\n";
  return gate.pass ? 0 : 1;
}

int run_simulate(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const double eps = p["eps"].get<double>();
  const double dt = cfg.dt_rule().dt_for(eps);
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  const int grid = cfg.grid_size() > 0 ? cfg.grid_size() : default_grid_size(model);
  const StreamKey key = root_key(cfg);
  const Trajectory traj = simulate_coupled(
      model, x, y, eps, cfg.T(), dt, key.with(Channel::slow_noise),
      key.with(Channel::fast_noise), grid, cfg.allow_unstable_dt());
  if (p["format"].get<std::string>() == "binary")
    write_trajectory_binary(traj, cfg.out_dir() + "/trajectory.bin");
  else
    write_trajectory_csv(traj, cfg.out_dir() + "/trajectory.csv");
  nlohmann::json v;
  v["pass"] = true;
  v["steps"] = traj.steps();
  write_verdict(cfg, v);
  return 0;
}

int run_fast(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const double dt = cfg.dt_rule().kind == DtRule::Kind::fixed
                        ? cfg.dt_rule().value
                        : 1e-3;
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  const int grid = cfg.grid_size() > 0 ? cfg.grid_size() : default_grid_size(model);
  const Trajectory traj =
      simulate_frozen_fast(model, x, y, cfg.T(), dt,
                           root_key(cfg).with(Channel::fast_noise), grid);
  if (p["format"].get<std::string>() == "binary")
    write_trajectory_binary(traj, cfg.out_dir() + "/trajectory.bin");
  else
    write_trajectory_csv(traj, cfg.out_dir() + "/trajectory.csv");
  nlohmann::json v;
  v["pass"] = true;
  v["steps"] = traj.steps();
  write_verdict(cfg, v);
  return 0;
}

int run_estimate(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  ErgodicParams params;
  params.T = p["T"].get<double>();
  params.Tb = p["Tb"].get<double>();
  params.dt = p["dt"].get<double>();
  params.replicas = p["replicas"].get<int>();
  params.grid_size = cfg.grid_size();
  params.jobs = cfg.jobs();
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const StreamKey key = root_key(cfg);

  nlohmann::json out;
  for (const auto& target : p["targets"]) {
    const std::string t = target.get<std::string>();
    if (t == "bbar") {
      const VectorEstimate est = estimate_bbar(model, x, params, key);
      out["bbar"] = {{"estimate", std::vector<double>(est.estimate.begin(),
                                                      est.estimate.end())},
                     {"se", std::vector<double>(est.se.begin(), est.se.end())},
                     {"T", est.T},
                     {"Tb", est.Tb},
                     {"replicas", est.replicas},
                     {"seed", cfg.seed()}};
    } else if (t == "S") {
      const MatrixEstimate est = estimate_S(model, x, params, key);
      CsvWriter csv(cfg.out_dir() + "/S.csv");
      for (int i = 0; i < est.estimate.rows(); ++i) {
        std::vector<double> row(est.estimate.cols());
        for (int j = 0; j < est.estimate.cols(); ++j) row[j] = est.estimate(i, j);
        csv.row_values(row);
      }
      out["S"] = {{"T", est.T},
                  {"Tb", est.Tb},
                  {"replicas", est.replicas},
                  {"max_se", est.se.maxCoeff()},
                  {"seed", cfg.seed()}};
    } else if (t == "moments") {
      const EstimatorStats est =
          invariant_moments(model, x, p["p"].get<int>(), params, key);
      out["moments"] = est.to_json();
    } else if (t == "mixing") {
      const FieldCoeffs y1 = cfg.initial_field("y1", model.fast_basis, 1, 1.0);
      const FieldCoeffs y2 = cfg.initial_field("y2", model.fast_basis, 1, 0.0);
      const MixingFit fit =
          estimate_mixing(model, x, y1, y2, p["mixing_T"].get<double>(),
                          params.dt, params.replicas, key, cfg.jobs());
      out["mixing"] = {{"rate", fit.rate},
                       {"prefactor", fit.prefactor},
                       {"r2", fit.r2},
                       {"seed", cfg.seed()}};
    } else {
      throw ConfigError("config error at 'study_params.targets': unknown target '" +
                        t + "'");
    }
  }
  write_json_file(out, cfg.out_dir() + "/estimate.json");
  nlohmann::json v;
  v["pass"] = true;
  write_verdict(cfg, v);
  return 0;
}

std::vector<double> eps_list_of(const nlohmann::json& p) {
  std::vector<double> eps;
  for (const auto& e : p["eps_list"]) eps.push_back(e.get<double>());
  return eps;
}

int run_remainder(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  const FieldCoeffs h = unit_mode(model.slow_basis, p["h_mode"].get<int>());
  if (!model.analytic_bbar)
    throw ConfigError("remainder study needs a model with closed-form bbar");
  const EpsSeriesResult res = remainder_study(
      model, model.analytic_bbar, h, x, y, eps_list_of(p),
      p["kappa1"].get<double>(), p["kappa2"].get<double>(), cfg.T(),
      cfg.dt_rule(), p["replicas"].get<int>(), root_key(cfg), cfg.jobs());
  write_eps_series_csv(res, cfg.out_dir() + "/remainder.csv");
  write_verdict(cfg, res.verdict("remainder"));
  return res.decreasing ? 0 : 1;
}

int run_gap(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  const CylindricalFn phi =
      mode_square_fn(model.slow_basis, p["phi_mode"].get<int>());
  const AveragedCoeffs avg = make_analytic_averaged(model);
  GapParams gp;
  gp.t1 = p["t1"].get<double>();
  gp.t2 = p["t2"].get<double>();
  gp.outer_replicas = p["outer_replicas"].get<int>();
  gp.inner_replicas = p["inner_replicas"].get<int>();
  gp.grid_size = cfg.grid_size();
  const EpsSeriesResult res =
      gap_study(model, avg, phi, x, y, eps_list_of(p), p["kappa1"].get<double>(),
                p["kappa2"].get<double>(), gp, cfg.dt_rule(), root_key(cfg),
                cfg.jobs());
  write_eps_series_csv(res, cfg.out_dir() + "/gap.csv");
  write_verdict(cfg, res.verdict("gap"));
  return res.decreasing ? 0 : 1;
}

int run_converge(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const ModelGate gate = gate_of(cfg, model);
  if (!gate.pass || model.g1_depends_on_fast) {
    write_json_file(gate.to_json(), cfg.out_dir() + "/gate_report.json");
    nlohmann::json v;
    v["pass"] = false;
    v["refused"] = true;
    write_verdict(cfg, v);
    std::cerr << "converge: refusing to run, model failed the validity gate\n";
    return 2;
  }
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  const StreamKey key = root_key(cfg);

  AveragedCoeffs avg;
  if (p["provenance"].get<std::string>() == "estimated") {
    ErgodicParams est;
    est.T = p["est_T"].get<double>();
    est.replicas = p["est_replicas"].get<int>();
    est.dt = 1e-3;
    est.jobs = cfg.jobs();
    avg = make_estimated_averaged(model, est, {zero_field(model.slow_basis)},
                                  key.with_eps_index(7000));
  } else {
    avg = make_analytic_averaged(model);
  }

  const ConvergenceResult res = convergence_study(
      model, gate, avg, x, y, eps_list_of(p), cfg.T(), cfg.dt_rule(),
      p["replicas"].get<int>(), key, cfg.jobs());
  write_convergence_csv(res, cfg.out_dir() + "/convergence.csv");
  write_verdict(cfg, res.verdict());
  return res.verdict()["pass"].get<bool>() ? 0 : 1;
}

int run_moments(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  std::vector<int> p_list;
  for (const auto& v : p["p_list"]) p_list.push_back(v.get<int>());
  const BoundReport res = moment_bound_study(
      model, x, y, eps_list_of(p), p_list, cfg.T(), cfg.dt_rule(),
      p["replicas"].get<int>(), root_key(cfg), cfg.jobs());
  write_bound_csv(res, cfg.out_dir() + "/moments.csv");
  write_verdict(cfg, res.verdict());
  return res.pass ? 0 : 1;
}

int run_holder(const RunConfig& cfg) {
  const ModelSpec model = cfg.model();
  const auto& p = cfg.study_params();
  const FieldCoeffs x = cfg.initial_field("x", model.slow_basis, 1, 1.0);
  const FieldCoeffs y = cfg.initial_field("y", model.fast_basis, 1, 0.0);
  std::vector<double> h_list;
  for (const auto& v : p["h_list"]) h_list.push_back(v.get<double>());
  const HolderReport res = holder_increment_study(
      model, x, y, eps_list_of(p), h_list, cfg.T(), cfg.dt_rule(),
      p["replicas"].get<int>(), root_key(cfg), cfg.jobs());
  write_holder_csv(res, cfg.out_dir() + "/holder.csv");
  write_verdict(cfg, res.verdict());
  return res.pass ? 0 : 1;
}

int dispatch(const std::string& study, const CliOptions& opt) {
  RunConfig cfg = load_config(opt, study);
  ensure_dir(cfg.out_dir());
  write_json_file(cfg.canonical(), cfg.out_dir() + "/config.json");
  if (study == "check") return run_check(cfg);
  if (study == "simulate") return run_simulate(cfg);
  if (study == "fast") return run_fast(cfg);
  if (study == "estimate") return run_estimate(cfg);
  if (study == "remainder") return run_remainder(cfg);
  if (study == "gap") return run_gap(cfg);
  if (study == "converge") return run_converge(cfg);
  if (study == "moments") return run_moments(cfg);
  if (study == "holder") return run_holder(cfg);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral slow-fast reaction-diffusion simulator and verifier"};
  app.require_subcommand(1);

  CliOptions opt;
  const std::vector<std::string> studies{"check",    "simulate", "fast",
                                         "estimate", "remainder", "gap",
                                         "converge", "moments",   "holder"};
  for (const auto& name : studies) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--seed", opt.seed, "root RNG seed");
    sub->add_option("--jobs", opt.jobs, "worker threads");
    sub->add_option("--out", opt.out, "run directory");
    sub->add_option("--override", opt.overrides,
                    "dot-path config override KEY=VALUE");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::string study = app.get_subcommands().front()->get_name();
  try {
    return dispatch(study, opt);
  } catch (const twoscale::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const twoscale::GateFailure& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}
