#pragma once

#include <string>

#include <json.hpp>

#include "twoscale/experiments.hpp"

namespace twoscale {

// Structured configuration problem: carries the offending key path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validated run configuration. `canonical` holds the fully-resolved JSON
// form (all defaults filled, sorted keys); unknown keys are rejected with
// their dot path.
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(nlohmann::json j);

  const nlohmann::json& canonical() const { return canonical_; }

  std::string model_name() const;
  std::string study() const;
  const nlohmann::json& study_params() const;

  int modes() const;
  int grid_size() const;  // 0: default 2N
  double length() const;

  BasisPtr slow_basis() const;
  BasisPtr fast_basis() const;
  ModelSpec model() const;

  double beta1() const;
  double beta2() const;
  double rho1() const;  // +inf for "inf"
  double rho2() const;
  int h2_samples() const;

  double T() const;
  DtRule dt_rule() const;
  bool allow_unstable_dt() const;

  std::uint64_t seed() const;
  int jobs() const;  // resolved: flag > env TWOSCALE_JOBS > hardware
  std::string out_dir() const;

  // Initial data under study_params (key "x" or "y"): either
  // {"mode": k, "amp": a} or an explicit coefficient array.
  FieldCoeffs initial_field(const std::string& key, const BasisPtr& basis,
                            int default_mode, double default_amp) const;

  void set_seed(std::uint64_t seed);
  void set_out(const std::string& out);
  void set_jobs(int jobs);

 private:
  RunConfig() = default;
  nlohmann::json canonical_;
};

// Applies "dot.path=value" into the JSON document; value parsed as JSON when
// possible, kept as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace twoscale
