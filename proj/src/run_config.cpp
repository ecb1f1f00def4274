#include "twoscale/run_config.hpp"

#include <cstdlib>
#include <limits>
#include <numbers>
#include <thread>

#include "twoscale/io_util.hpp"

namespace twoscale {

namespace {

const std::vector<std::string> kStudies = {"check",     "simulate", "fast",
                                           "estimate",  "remainder", "gap",
                                           "converge",  "moments",   "holder"};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at '" + path + "': " + what);
}

void expect_type(const nlohmann::json& v, const std::string& path,
                 const std::string& type) {
  bool ok = false;
  if (type == "number") ok = v.is_number();
  else if (type == "integer") ok = v.is_number_integer();
  else if (type == "string") ok = v.is_string();
  else if (type == "boolean") ok = v.is_boolean();
  else if (type == "object") ok = v.is_object();
  else if (type == "array") ok = v.is_array();
  if (!ok) fail(path, "expected " + type);
}

// Merge defaults into dst (leaving present keys alone), then reject keys of
// dst that the defaults do not know.
void fill_and_check(nlohmann::json& dst, const nlohmann::json& defaults,
                    const std::string& path) {
  if (!dst.is_object()) fail(path, "expected object");
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!dst.contains(it.key())) dst[it.key()] = it.value();
  }
  for (auto it = dst.begin(); it != dst.end(); ++it) {
    if (!defaults.contains(it.key()))
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

nlohmann::json study_defaults(const std::string& study) {
  nlohmann::json d = nlohmann::json::object();
  auto eps_default = nlohmann::json::array({0.1, 0.02, 0.004});
  if (study == "check") {
    // no extra parameters
  } else if (study == "simulate") {
    d["eps"] = 0.1;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
    d["format"] = "csv";
  } else if (study == "fast") {
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
    d["format"] = "csv";
  } else if (study == "estimate") {
    d["targets"] = nlohmann::json::array({"bbar", "S", "moments", "mixing"});
    d["T"] = 100.0;
    d["Tb"] = -1.0;
    d["dt"] = 1e-3;
    d["replicas"] = 8;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["p"] = 2;
    d["mixing_T"] = 2.0;
    d["y1"] = {{"mode", 1}, {"amp", 1.0}};
    d["y2"] = {{"mode", 1}, {"amp", 0.0}};
  } else if (study == "remainder") {
    d["eps_list"] = eps_default;
    d["replicas"] = 200;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
    d["h_mode"] = 1;
    d["kappa1"] = 0.5;
    d["kappa2"] = 1.0;
  } else if (study == "gap") {
    d["eps_list"] = eps_default;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
    d["phi_mode"] = 1;
    d["t1"] = 0.25;
    d["t2"] = 0.75;
    d["outer_replicas"] = 16;
    d["inner_replicas"] = 32;
    d["kappa1"] = 0.5;
    d["kappa2"] = 1.0;
  } else if (study == "converge") {
    d["eps_list"] = eps_default;
    d["replicas"] = 200;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
    d["provenance"] = "analytic";
    d["est_T"] = 150.0;
    d["est_replicas"] = 8;
  } else if (study == "moments") {
    d["eps_list"] = eps_default;
    d["p_list"] = nlohmann::json::array({2, 4});
    d["replicas"] = 100;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
  } else if (study == "holder") {
    d["eps_list"] = eps_default;
    d["h_list"] = nlohmann::json::array({0.01, 0.02, 0.04, 0.08});
    d["replicas"] = 400;
    d["x"] = {{"mode", 1}, {"amp", 1.0}};
    d["y"] = {{"mode", 1}, {"amp", 0.0}};
  }
  return d;
}

double parse_rho(const nlohmann::json& v, const std::string& path) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    fail(path, "expected a number or \"inf\"");
  }
  expect_type(v, path, "number");
  const double r = v.get<double>();
  if (!(r > 2.0)) fail(path, "rho must be in (2, inf]");
  return r;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  return from_json(read_json_file(path));
}

RunConfig RunConfig::from_json(nlohmann::json j) {
  if (!j.is_object()) throw ConfigError("config error: root must be an object");

  nlohmann::json defaults;
  defaults["model"] = "linear_test_model";
  defaults["model_params"] = nlohmann::json::object();
  defaults["basis"] = {{"N", 32},
                       {"L", std::numbers::pi},
                       {"slow_shift", 0.0},
                       {"fast_shift", 0.0},
                       {"grid_M", 0}};
  defaults["hypothesis"] = {{"beta1", 0.75},
                            {"beta2", 0.75},
                            {"rho1", "inf"},
                            {"rho2", "inf"},
                            {"h2_samples", 400}};
  defaults["integrator"] = {
      {"T", 1.0}, {"dt_rule", "eps/10"}, {"allow_unstable_dt", false}};
  defaults["study"] = "check";
  defaults["study_params"] = nlohmann::json::object();
  defaults["seed"] = 0;
  defaults["jobs"] = 0;
  defaults["out"] = "";

  fill_and_check(j, defaults, "");
  fill_and_check(j["basis"], defaults["basis"], "basis");
  fill_and_check(j["hypothesis"], defaults["hypothesis"], "hypothesis");
  fill_and_check(j["integrator"], defaults["integrator"], "integrator");

  expect_type(j["model"], "model", "string");
  expect_type(j["model_params"], "model_params", "object");
  expect_type(j["study"], "study", "string");
  expect_type(j["basis"]["N"], "basis.N", "integer");
  expect_type(j["basis"]["L"], "basis.L", "number");
  expect_type(j["basis"]["slow_shift"], "basis.slow_shift", "number");
  expect_type(j["basis"]["fast_shift"], "basis.fast_shift", "number");
  expect_type(j["basis"]["grid_M"], "basis.grid_M", "integer");
  expect_type(j["hypothesis"]["beta1"], "hypothesis.beta1", "number");
  expect_type(j["hypothesis"]["beta2"], "hypothesis.beta2", "number");
  expect_type(j["hypothesis"]["h2_samples"], "hypothesis.h2_samples", "integer");
  expect_type(j["integrator"]["T"], "integrator.T", "number");
  expect_type(j["integrator"]["dt_rule"], "integrator.dt_rule", "string");
  expect_type(j["integrator"]["allow_unstable_dt"],
              "integrator.allow_unstable_dt", "boolean");
  expect_type(j["seed"], "seed", "integer");
  expect_type(j["jobs"], "jobs", "integer");
  expect_type(j["out"], "out", "string");

  const std::string study = j["study"].get<std::string>();
  bool known = false;
  for (const auto& s : kStudies) known = known || s == study;
  if (!known) fail("study", "unknown study '" + study + "'");

  if (j["basis"]["N"].get<int>() < 1) fail("basis.N", "N must be >= 1");
  if (!(j["basis"]["L"].get<double>() > 0.0)) fail("basis.L", "L must be > 0");
  if (!(j["integrator"]["T"].get<double>() > 0.0))
    fail("integrator.T", "T must be > 0");
  parse_rho(j["hypothesis"]["rho1"], "hypothesis.rho1");
  parse_rho(j["hypothesis"]["rho2"], "hypothesis.rho2");
  try {
    DtRule::parse(j["integrator"]["dt_rule"].get<std::string>());
  } catch (const std::exception& e) {
    fail("integrator.dt_rule", e.what());
  }

  fill_and_check(j["study_params"], study_defaults(study), "study_params");
  if (j["out"].get<std::string>().empty()) j["out"] = "runs/" + study;

  RunConfig cfg;
  cfg.canonical_ = std::move(j);
  // Constructing the model validates its parameters against the catalog.
  cfg.model();
  return cfg;
}

std::string RunConfig::model_name() const {
  return canonical_["model"].get<std::string>();
}

std::string RunConfig::study() const {
  return canonical_["study"].get<std::string>();
}

const nlohmann::json& RunConfig::study_params() const {
  return canonical_["study_params"];
}

int RunConfig::modes() const { return canonical_["basis"]["N"].get<int>(); }

int RunConfig::grid_size() const {
  return canonical_["basis"]["grid_M"].get<int>();
}

double RunConfig::length() const {
  return canonical_["basis"]["L"].get<double>();
}

BasisPtr RunConfig::slow_basis() const {
  const double shift = canonical_["basis"]["slow_shift"].get<double>();
  return build_basis(shift > 0.0 ? BasisKind::shifted_laplacian
                                 : BasisKind::dirichlet_laplacian,
                     BasisRole::slow, modes(), length(), shift);
}

BasisPtr RunConfig::fast_basis() const {
  const double shift = canonical_["basis"]["fast_shift"].get<double>();
  return build_basis(shift > 0.0 ? BasisKind::shifted_laplacian
                                 : BasisKind::dirichlet_laplacian,
                     BasisRole::fast, modes(), length(), shift);
}

ModelSpec RunConfig::model() const {
  return make_model(model_name(), canonical_["model_params"], slow_basis(),
                    fast_basis());
}

double RunConfig::beta1() const {
  return canonical_["hypothesis"]["beta1"].get<double>();
}
double RunConfig::beta2() const {
  return canonical_["hypothesis"]["beta2"].get<double>();
}
double RunConfig::rho1() const {
  return parse_rho(canonical_["hypothesis"]["rho1"], "hypothesis.rho1");
}
double RunConfig::rho2() const {
  return parse_rho(canonical_["hypothesis"]["rho2"], "hypothesis.rho2");
}
int RunConfig::h2_samples() const {
  return canonical_["hypothesis"]["h2_samples"].get<int>();
}

double RunConfig::T() const {
  return canonical_["integrator"]["T"].get<double>();
}

DtRule RunConfig::dt_rule() const {
  return DtRule::parse(canonical_["integrator"]["dt_rule"].get<std::string>());
}

bool RunConfig::allow_unstable_dt() const {
  return canonical_["integrator"]["allow_unstable_dt"].get<bool>();
}

std::uint64_t RunConfig::seed() const {
  return canonical_["seed"].get<std::uint64_t>();
}

int RunConfig::jobs() const {
  int jobs = canonical_["jobs"].get<int>();
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("TWOSCALE_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

std::string RunConfig::out_dir() const {
  return canonical_["out"].get<std::string>();
}

FieldCoeffs RunConfig::initial_field(const std::string& key,
                                     const BasisPtr& basis, int default_mode,
                                     double default_amp) const {
  if (!study_params().contains(key))
    return unit_mode(basis, default_mode, default_amp);
  const nlohmann::json& f = study_params()[key];
  if (f.is_array()) {
    if (static_cast<int>(f.size()) != basis->mode_count)
      fail("study_params." + key, "coefficient array must have N entries");
    Eigen::VectorXd c(basis->mode_count);
    for (int i = 0; i < basis->mode_count; ++i) c[i] = f[i].get<double>();
    return make_field(basis, c);
  }
  if (f.is_object()) {
    const int mode = f.value("mode", default_mode);
    const double amp = f.value("amp", default_amp);
    if (mode < 1 || mode > basis->mode_count)
      fail("study_params." + key + ".mode", "mode out of range");
    return unit_mode(basis, mode, amp);
  }
  fail("study_params." + key, "expected object {mode, amp} or array");
}

void RunConfig::set_seed(std::uint64_t seed) { canonical_["seed"] = seed; }
void RunConfig::set_out(const std::string& out) { canonical_["out"] = out; }
void RunConfig::set_jobs(int jobs) { canonical_["jobs"] = jobs; }

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (...) {
    value = raw;  // plain string
  }

  nlohmann::json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override has an empty key segment");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    if (!cur->contains(key)) (*cur)[key] = nlohmann::json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

}  // namespace twoscale
