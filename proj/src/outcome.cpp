#include "swsim/outcome.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace swsim {

double ScenarioConfig::age_term(double age) const {
  double value = age_effect * age;
  if (age_response == AgeResponse::nonlinear) {
    const double u = age - nonlinear.center;
    value += nonlinear.quadratic * u * u;
    if (nonlinear.frailty != 0.0)
      value -= nonlinear.frailty *
               std::exp((age - nonlinear.frailty_age) / nonlinear.frailty_scale);
  }
  return value;
}

const std::vector<double>& lockdown_trend() {
  static const std::vector<double> trend{0, 0, -4, -4, -4, -5, -5, -5, -6};
  return trend;
}

NonlinearAge default_nonlinear_age() {
  NonlinearAge f;
  f.frailty = 20.0;
  f.frailty_age = 102.0;
  f.frailty_scale = 10.0;
  return f;
}

ScenarioConfig scenario_preset(const std::string& name, double theta, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("number of steps must be positive");
  ScenarioConfig config;
  config.name = name;
  config.theta = theta;
  config.secular_trend.assign(n_steps + 1, 0.0);
  if (name == "a") return config;
  if (name == "b") {
    config.age_response = AgeResponse::nonlinear;
    config.nonlinear = default_nonlinear_age();
    return config;
  }
  if (name == "c" || name == "d") {
    const auto& trend = lockdown_trend();
    if (static_cast<std::size_t>(n_steps + 1) > trend.size())
      throw std::invalid_argument("secular trend is only defined for up to " +
                                  std::to_string(trend.size() - 1) + " steps");
    config.secular_trend.assign(trend.begin(), trend.begin() + n_steps + 1);
    if (name == "d") config.cohort = CohortMode::open;
    return config;
  }
  throw std::invalid_argument("unknown scenario '" + name + "' (expected a, b, c or d)");
}

int ObservationTable::max_period() const {
  int m = -1;
  for (const auto& r : rows) m = std::max(m, r.period);
  return m;
}

ObservationTable generate_outcomes(const CohortPanel& panel, const ScenarioConfig& config,
                                   const RandomStream& stream) {
  const auto& design = panel.design;
  const int n_periods = design.n_periods();
  if (config.sigma2_cluster < 0 || config.sigma2_participant < 0 || config.sigma2_residual < 0)
    throw std::invalid_argument("variance components must be non-negative");
  if (config.secular_trend.size() < static_cast<std::size_t>(n_periods))
    throw std::invalid_argument("secular trend has " + std::to_string(config.secular_trend.size()) +
                                " entries but the design has " + std::to_string(n_periods) +
                                " periods");

  const double sd_c = std::sqrt(config.sigma2_cluster);
  const double sd_d = std::sqrt(config.sigma2_participant);
  const double sd_e = std::sqrt(config.sigma2_residual);

  std::vector<double> cluster_effect(design.n_clusters);
  for (int i = 0; i < design.n_clusters; ++i) {
    auto engine = stream.child(Purpose::cluster_effect, i).engine();
    cluster_effect[i] = sd_c * std::normal_distribution<double>()(engine);
  }

  ObservationTable table;
  for (const auto& t : panel.trajectories) {
    auto d_engine = stream.child(Purpose::participant_effect, t.cluster, t.participant).engine();
    const double participant_effect = sd_d * std::normal_distribution<double>()(d_engine);
    auto e_engine = stream.child(Purpose::residual, t.cluster, t.participant).engine();
    std::normal_distribution<double> residual;
    const int last = t.last_period(n_periods);
    for (int j = t.entry_period; j <= last; ++j) {
      Observation o;
      o.cluster = t.cluster;
      o.period = j;
      o.participant = t.participant;
      o.exposed = design.exposed(t.cluster, j);
      o.age = t.age_at(j);
      o.baseline_age = t.age.front();
      o.widowed = t.widowed_at(j);
      o.baseline_widowed = t.widowed.front();
      const double e = sd_e * residual(e_engine);
      o.outcome = config.intercept + cluster_effect[t.cluster] + participant_effect +
                  config.age_term(o.age) + config.widowed_effect * (o.widowed ? 1.0 : 0.0) +
                  config.secular_trend[j] + e + config.theta * (o.exposed ? 1.0 : 0.0);
      table.rows.push_back(o);
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    if (a.cluster != b.cluster) return a.cluster < b.cluster;
    if (a.period != b.period) return a.period < b.period;
    return a.participant < b.participant;
  });
  return table;
}

}  // namespace swsim
