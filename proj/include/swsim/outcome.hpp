#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "swsim/cohort.hpp"
#include "swsim/random.hpp"

namespace swsim {

enum class AgeResponse { linear, nonlinear };

/// Terms added to the linear age effect under a nonlinear response:
///   quadratic * (age - center)^2 - frailty * exp((age - frailty_age) / frailty_scale).
/// The exponential term is an extra decline that accelerates toward the
/// oldest ages; it reaches -frailty at age frailty_age.
struct NonlinearAge {
  double center = 60.0;
  double quadratic = 0.0;
  double frailty = 0.0;
  double frailty_age = 102.0;
  double frailty_scale = 10.0;

  bool operator==(const NonlinearAge&) const = default;
};

/// Generating model for one data scenario. Defaults are the scenario (a) values.
struct ScenarioConfig {
  std::string name = "a";
  double intercept = 70.0;
  double theta = 0.0;
  double age_effect = -0.25;
  double widowed_effect = -5.0;
  std::vector<double> secular_trend;  // one shift per period, first entry 0
  AgeResponse age_response = AgeResponse::linear;
  NonlinearAge nonlinear;
  double sigma2_cluster = 10.0;
  double sigma2_participant = 10.0;
  double sigma2_residual = 20.0;
  CohortMode cohort = CohortMode::closed;
  CohortParameters cohort_parameters;

  double age_term(double age) const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Period shifts of the lockdown trend scenario, for up to 8 steps.
const std::vector<double>& lockdown_trend();

/// Default curvature used by scenario (b).
NonlinearAge default_nonlinear_age();

/// Presets "a" through "d". The lockdown trend is truncated to n_steps + 1 entries.
ScenarioConfig scenario_preset(const std::string& name, double theta, int n_steps);

struct Observation {
  int cluster = 0;      // 0-based
  int period = 0;
  int participant = 0;  // 0-based, unique within cluster
  bool exposed = false;
  double age = 0.0;
  double baseline_age = 0.0;  // value at the participant's entry period
  bool widowed = false;
  bool baseline_widowed = false;
  double outcome = 0.0;

  bool operator==(const Observation&) const = default;
};

/// Long-format analysis data, one row per active (cluster, period, participant),
/// ordered by cluster, then period, then participant.
struct ObservationTable {
  std::vector<Observation> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  int max_period() const;
  bool operator==(const ObservationTable&) const = default;
};

/// Draws random intercepts once per cluster and participant and adds
/// independent residuals. Throws std::invalid_argument on negative variances
/// or a secular trend shorter than the number of periods.
ObservationTable generate_outcomes(const CohortPanel& panel, const ScenarioConfig& config,
                                   const RandomStream& stream);

}  // namespace swsim
