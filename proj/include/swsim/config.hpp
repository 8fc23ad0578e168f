#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "swsim/harness.hpp"
#include "swsim/outcome.hpp"

namespace swsim {

/// Every problem found while validating a configuration, reported together.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Optional replacements for preset scenario fields, applied to every scenario.
struct ScenarioOverrides {
  std::optional<double> intercept;
  std::optional<double> age_effect;
  std::optional<double> widowed_effect;
  std::optional<double> widow_hazard;
  std::optional<std::vector<double>> secular_trend;  // truncated to steps + 1
  std::optional<AgeResponse> age_response;
  std::optional<NonlinearAge> nonlinear;
  std::optional<double> sigma2_cluster;
  std::optional<double> sigma2_participant;
  std::optional<double> sigma2_residual;
  std::optional<CohortMode> cohort;
  std::optional<double> attrition_rate;
  std::optional<int> cluster_size;

  void apply(ScenarioConfig& config) const;
  bool operator==(const ScenarioOverrides&) const = default;
};

struct RunConfig {
  std::vector<std::string> scenarios{"a", "b", "c", "d"};
  std::vector<double> thetas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> steps{4, 6, 8};
  std::vector<int> models{1, 2, 3, 4, 5, 6};
  int reps = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "out";
  double alpha = 0.05;
  bool rerandomize = true;
  int clusters = 48;
  double period_length = 0.5;
  ScenarioOverrides overrides;

  bool operator==(const RunConfig&) const = default;
};

/// Unknown keys and invalid values throw ConfigError listing all problems.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Checks cross-field constraints; throws ConfigError.
void validate(const RunConfig& config);

/// Fully resolved configuration, every key present.
nlohmann::json to_json(const RunConfig& config);

/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

ScenarioConfig resolve_scenario(const RunConfig& config, const std::string& name, double theta,
                                int steps);

GridSpec make_grid(const RunConfig& config);

}  // namespace swsim
