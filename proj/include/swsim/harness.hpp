#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swsim/design.hpp"
#include "swsim/lmm.hpp"
#include "swsim/outcome.hpp"

namespace swsim {

struct ReplicateResult {
  std::string scenario;
  double theta = 0.0;
  int steps = 0;
  int replicate = 0;
  int model = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool significant = false;
  VarianceComponents components;
  bool converged = false;
  double wall_time = 0.0;  // seconds spent fitting and testing this model
  std::string error;       // set when the fit threw; the record is still emitted
};

struct ScenarioSummary {
  std::string scenario;
  double theta = 0.0;
  int steps = 0;
  int model = 0;
  int n_reps = 0;
  int n_converged = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mc_se = 0.0;  // empirical SD / sqrt(n_converged)
  double empirical_sd = 0.0;
  double mean_se = 0.0;
  double power = 0.0;  // fraction significant among converged fits
};

struct AnalysisOptions {
  double alpha = 0.05;
  bool rerandomize = true;  // draw a new allocation for each replicate
  RemlOptions reml;
};

struct SimulatedTrial {
  TrialDesign design;  // with the allocation actually used
  CohortPanel panel;
  ObservationTable table;
};

/// Optionally re-randomizes the allocation, then draws cohort and outcomes.
SimulatedTrial simulate_trial(const ScenarioConfig& scenario, const TrialDesign& design,
                              std::uint64_t seed, bool rerandomize = true);

/// Simulates one dataset and fits every requested model to it.
std::vector<ReplicateResult> run_replicate(const ScenarioConfig& scenario,
                                           const TrialDesign& design,
                                           const std::vector<int>& models, std::uint64_t seed,
                                           int replicate = 0, const AnalysisOptions& options = {});

using ScenarioFactory = std::function<ScenarioConfig(const std::string&, double, int)>;

struct GridSpec {
  std::vector<std::string> scenarios{"a"};
  std::vector<double> thetas{0.0};
  std::vector<int> steps{4};
  std::vector<int> models{4};
  int n_reps = 1;
  std::uint64_t master_seed = 1;
  int workers = 1;
  int n_clusters = 48;
  double period_length = 0.5;
  AnalysisOptions analysis;
  ScenarioFactory make_scenario = scenario_preset;
};

/// Seed of one grid cell replicate; independent of scheduling.
std::uint64_t replicate_seed(std::uint64_t master_seed, const std::string& scenario, double theta,
                             int steps, int replicate);

/// Runs every (scenario, theta, steps, replicate) cell once on a pool of
/// `workers` threads. The sink is called under a lock, in completion order.
/// An exception thrown by the sink stops the run and is rethrown.
void run_grid(const GridSpec& spec, const std::function<void(const ReplicateResult&)>& sink);

/// Groups by (scenario, theta, steps, model); output sorted by that key.
std::vector<ScenarioSummary> summarize(const std::vector<ReplicateResult>& results);

}  // namespace swsim
