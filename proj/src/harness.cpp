#include "swsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "swsim/inference.hpp"
#include "swsim/modelspec.hpp"

namespace swsim {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SimulatedTrial simulate_trial(const ScenarioConfig& scenario, const TrialDesign& design,
                              std::uint64_t seed, bool rerandomize) {
  const RandomStream root(seed);
  SimulatedTrial trial;
  trial.design =
      rerandomize ? randomize_allocation(design, root.child(Purpose::allocation)) : design;
  const auto cohort_stream = root.child(Purpose::cohort);
  trial.panel =
      scenario.cohort == CohortMode::open
          ? generate_open_cohort(trial.design, scenario.cohort_parameters, cohort_stream)
          : generate_closed_cohort(trial.design, scenario.cohort_parameters, cohort_stream);
  trial.table = generate_outcomes(trial.panel, scenario, root.child(Purpose::outcome));
  return trial;
}

std::vector<ReplicateResult> run_replicate(const ScenarioConfig& scenario,
                                           const TrialDesign& design,
                                           const std::vector<int>& models, std::uint64_t seed,
                                           int replicate, const AnalysisOptions& options) {
  const auto table = simulate_trial(scenario, design, seed, options.rerandomize).table;

  std::vector<ReplicateResult> out;
  for (int id : models) {
    ReplicateResult r;
    r.scenario = scenario.name;
    r.theta = scenario.theta;
    r.steps = design.n_steps;
    r.replicate = replicate;
    r.model = id;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto matrices = build_matrices(table, formulation(id));
      const MixedModelSystem system(matrices);
      const auto fit = fit_reml(system, options.reml);
      const int column = matrices.column("exposed");
      const auto sw = satterthwaite_df(system, fit, column);
      const auto test = wald_t_test(fit, sw.df, column, options.alpha);
      r.estimate = test.estimate;
      r.standard_error = test.standard_error;
      r.df = test.df;
      r.p_value = test.p_value;
      r.significant = test.significant;
      r.components = fit.components;
      r.converged = fit.converged;
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.estimate = r.standard_error = r.df = r.p_value = nan;
      r.components = {nan, nan, nan};
      r.converged = false;
      r.error = e.what();
    }
    r.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master_seed, const std::string& scenario, double theta,
                             int steps, int replicate) {
  return hash_key(master_seed, fnv1a(scenario), double_bits(theta),
                  static_cast<std::uint64_t>(steps), static_cast<std::uint64_t>(replicate));
}

void run_grid(const GridSpec& spec, const std::function<void(const ReplicateResult&)>& sink) {
  if (spec.n_reps < 1) throw std::invalid_argument("number of replicates must be positive");

  struct Cell {
    std::string scenario;
    double theta;
    int steps;
    int replicate;
  };
  std::vector<Cell> cells;
  for (const auto& s : spec.scenarios)
    for (double theta : spec.thetas)
      for (int steps : spec.steps)
        for (int rep = 0; rep < spec.n_reps; ++rep) cells.push_back({s, theta, steps, rep});

  // Resolve configurations up front so invalid combinations fail before any work.
  std::map<std::tuple<std::string, double, int>, std::pair<ScenarioConfig, TrialDesign>> setups;
  for (const auto& c : cells) {
    auto key = std::make_tuple(c.scenario, c.theta, c.steps);
    if (!setups.contains(key))
      setups.emplace(key, std::make_pair(spec.make_scenario(c.scenario, c.theta, c.steps),
                                         standard_swd(spec.n_clusters, c.steps,
                                                      spec.period_length)));
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex sink_mutex;
  std::exception_ptr failure;

  auto work = [&] {
    while (!stop) {
      const std::size_t index = next++;
      if (index >= cells.size()) return;
      const auto& c = cells[index];
      try {
        const auto& [scenario, design] = setups.at(std::make_tuple(c.scenario, c.theta, c.steps));
        const auto results =
            run_replicate(scenario, design, spec.models,
                          replicate_seed(spec.master_seed, c.scenario, c.theta, c.steps,
                                         c.replicate),
                          c.replicate, spec.analysis);
        std::lock_guard lock(sink_mutex);
        if (stop) return;
        for (const auto& r : results) sink(r);
      } catch (...) {
        std::lock_guard lock(sink_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
    }
  };

  const int workers = std::max(1, spec.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<ScenarioSummary> summarize(const std::vector<ReplicateResult>& results) {
  using Key = std::tuple<std::string, double, int, int>;
  std::map<Key, std::vector<const ReplicateResult*>> groups;
  for (const auto& r : results) groups[{r.scenario, r.theta, r.steps, r.model}].push_back(&r);

  std::vector<ScenarioSummary> out;
  for (auto& [key, members] : groups) {
    // Fixed summation order regardless of arrival order.
    std::sort(members.begin(), members.end(),
              [](auto a, auto b) { return a->replicate < b->replicate; });
    ScenarioSummary s;
    std::tie(s.scenario, s.theta, s.steps, s.model) = key;
    s.n_reps = static_cast<int>(members.size());
    double sum = 0.0, sum_se = 0.0;
    int significant = 0;
    for (const auto* r : members) {
      if (!r->converged) continue;
      ++s.n_converged;
      sum += r->estimate;
      sum_se += r->standard_error;
      significant += r->significant ? 1 : 0;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double n = s.n_converged;
    s.mean_estimate = n > 0 ? sum / n : nan;
    s.bias = s.mean_estimate - s.theta;
    s.mean_se = n > 0 ? sum_se / n : nan;
    s.power = n > 0 ? significant / n : nan;
    if (n > 1) {
      double ss = 0.0;
      for (const auto* r : members)
        if (r->converged) ss += (r->estimate - s.mean_estimate) * (r->estimate - s.mean_estimate);
      s.empirical_sd = std::sqrt(ss / (n - 1));
      s.mc_se = s.empirical_sd / std::sqrt(n);
    } else {
      s.empirical_sd = s.mc_se = nan;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace swsim
