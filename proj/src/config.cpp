#include "swsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace swsim {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string what = "invalid configuration:";
        for (const auto& p : problems) what += "\n  - " + p;
        return what;
      }()),
      problems_(std::move(problems)) {}

void ScenarioOverrides::apply(ScenarioConfig& c) const {
  const int periods = static_cast<int>(c.secular_trend.size());
  if (intercept) c.intercept = *intercept;
  if (age_effect) c.age_effect = *age_effect;
  if (widowed_effect) c.widowed_effect = *widowed_effect;
  if (widow_hazard) c.cohort_parameters.widow_hazard = *widow_hazard;
  if (secular_trend) {
    c.secular_trend = *secular_trend;
    if (static_cast<int>(c.secular_trend.size()) > periods) c.secular_trend.resize(periods);
  }
  if (age_response) c.age_response = *age_response;
  if (nonlinear) c.nonlinear = *nonlinear;
  if (sigma2_cluster) c.sigma2_cluster = *sigma2_cluster;
  if (sigma2_participant) c.sigma2_participant = *sigma2_participant;
  if (sigma2_residual) c.sigma2_residual = *sigma2_residual;
  if (cohort) c.cohort = *cohort;
  if (attrition_rate) c.cohort_parameters.attrition_rate = *attrition_rate;
  if (cluster_size) c.cohort_parameters.cluster_size = *cluster_size;
}

namespace {

using nlohmann::json;

// Reads typed values and records every problem instead of stopping at the first.
struct Reader {
  std::vector<std::string> problems;

  void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!known.contains(it.key()))
        problems.push_back("unknown key '" + where + it.key() + "'");
  }

  template <class T>
  void read(const json& j, const std::string& key, const std::string& where, T& target) {
    if (!j.contains(key)) return;
    try {
      target = j.at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back("'" + where + key + "' has the wrong type");
    }
  }

  template <class T>
  void read(const json& j, const std::string& key, const std::string& where,
            std::optional<T>& target) {
    if (!j.contains(key)) return;
    T value{};
    try {
      value = j.at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back("'" + where + key + "' has the wrong type");
      return;
    }
    target = value;
  }
};

ScenarioOverrides parse_overrides(const json& j, Reader& r) {
  ScenarioOverrides o;
  if (!j.is_object()) {
    r.problems.push_back("'overrides' must be an object");
    return o;
  }
  const std::string w = "overrides.";
  r.reject_unknown(j, w,
                   {"intercept", "age_effect", "widowed_effect", "widow_hazard", "secular_trend",
                    "age_response", "nonlinear", "sigma2_cluster", "sigma2_participant",
                    "sigma2_residual", "cohort", "attrition_rate", "cluster_size"});
  r.read(j, "intercept", w, o.intercept);
  r.read(j, "age_effect", w, o.age_effect);
  r.read(j, "widowed_effect", w, o.widowed_effect);
  r.read(j, "widow_hazard", w, o.widow_hazard);
  r.read(j, "secular_trend", w, o.secular_trend);
  r.read(j, "sigma2_cluster", w, o.sigma2_cluster);
  r.read(j, "sigma2_participant", w, o.sigma2_participant);
  r.read(j, "sigma2_residual", w, o.sigma2_residual);
  r.read(j, "attrition_rate", w, o.attrition_rate);
  r.read(j, "cluster_size", w, o.cluster_size);
  std::optional<std::string> text;
  r.read(j, "age_response", w, text);
  if (text) {
    if (*text == "linear") o.age_response = AgeResponse::linear;
    else if (*text == "nonlinear") o.age_response = AgeResponse::nonlinear;
    else r.problems.push_back("'overrides.age_response' must be \"linear\" or \"nonlinear\"");
  }
  text.reset();
  r.read(j, "cohort", w, text);
  if (text) {
    if (*text == "closed") o.cohort = CohortMode::closed;
    else if (*text == "open") o.cohort = CohortMode::open;
    else r.problems.push_back("'overrides.cohort' must be \"closed\" or \"open\"");
  }
  if (j.contains("nonlinear")) {
    const auto& n = j.at("nonlinear");
    if (!n.is_object()) {
      r.problems.push_back("'overrides.nonlinear' must be an object");
    } else {
      r.reject_unknown(n, w + "nonlinear.",
                       {"center", "quadratic", "frailty", "frailty_age", "frailty_scale"});
      NonlinearAge f = default_nonlinear_age();
      r.read(n, "center", w + "nonlinear.", f.center);
      r.read(n, "quadratic", w + "nonlinear.", f.quadratic);
      r.read(n, "frailty", w + "nonlinear.", f.frailty);
      r.read(n, "frailty_age", w + "nonlinear.", f.frailty_age);
      r.read(n, "frailty_scale", w + "nonlinear.", f.frailty_scale);
      if (!(f.frailty_scale > 0.0))
        r.problems.push_back("'overrides.nonlinear.frailty_scale' must be positive");
      o.nonlinear = f;
    }
  }
  return o;
}

json overrides_to_json(const ScenarioOverrides& o) {
  json j = json::object();
  auto put = [&](const char* key, const auto& value) {
    if (value) j[key] = *value;
  };
  put("intercept", o.intercept);
  put("age_effect", o.age_effect);
  put("widowed_effect", o.widowed_effect);
  put("widow_hazard", o.widow_hazard);
  put("secular_trend", o.secular_trend);
  if (o.age_response)
    j["age_response"] = *o.age_response == AgeResponse::linear ? "linear" : "nonlinear";
  if (o.nonlinear)
    j["nonlinear"] = {{"center", o.nonlinear->center},
                      {"quadratic", o.nonlinear->quadratic},
                      {"frailty", o.nonlinear->frailty},
                      {"frailty_age", o.nonlinear->frailty_age},
                      {"frailty_scale", o.nonlinear->frailty_scale}};
  put("sigma2_cluster", o.sigma2_cluster);
  put("sigma2_participant", o.sigma2_participant);
  put("sigma2_residual", o.sigma2_residual);
  if (o.cohort) j["cohort"] = *o.cohort == CohortMode::closed ? "closed" : "open";
  put("attrition_rate", o.attrition_rate);
  put("cluster_size", o.cluster_size);
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  Reader r;
  RunConfig c;
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  r.reject_unknown(j, "",
                   {"scenarios", "thetas", "steps", "models", "reps", "seed", "workers", "out",
                    "alpha", "rerandomize", "clusters", "period_length", "overrides"});
  r.read(j, "scenarios", "", c.scenarios);
  r.read(j, "thetas", "", c.thetas);
  r.read(j, "steps", "", c.steps);
  r.read(j, "models", "", c.models);
  r.read(j, "reps", "", c.reps);
  r.read(j, "seed", "", c.seed);
  r.read(j, "workers", "", c.workers);
  r.read(j, "out", "", c.out);
  r.read(j, "alpha", "", c.alpha);
  r.read(j, "rerandomize", "", c.rerandomize);
  r.read(j, "clusters", "", c.clusters);
  r.read(j, "period_length", "", c.period_length);
  if (j.contains("overrides")) c.overrides = parse_overrides(j.at("overrides"), r);
  if (!r.problems.empty()) throw ConfigError(r.problems);
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open configuration file '" + path + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"'" + path + "' is not valid JSON: " + e.what()});
  }
  return parse_run_config(j);
}

void validate(const RunConfig& c) {
  std::vector<std::string> problems;
  const std::set<std::string> names{"a", "b", "c", "d"};
  if (c.scenarios.empty()) problems.push_back("'scenarios' is empty");
  for (const auto& s : c.scenarios)
    if (!names.contains(s)) problems.push_back("unknown scenario '" + s + "'");
  if (c.thetas.empty()) problems.push_back("'thetas' is empty");
  for (double t : c.thetas)
    if (!std::isfinite(t)) problems.push_back("'thetas' must be finite");
  if (c.steps.empty()) problems.push_back("'steps' is empty");
  if (c.models.empty()) problems.push_back("'models' is empty");
  for (int m : c.models)
    if (m < 1 || m > 6) problems.push_back("model id " + std::to_string(m) + " is not in 1..6");
  if (c.reps < 1) problems.push_back("'reps' must be at least 1");
  if (c.workers < 1) problems.push_back("'workers' must be at least 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) problems.push_back("'alpha' must lie in (0, 1)");
  if (!(c.period_length > 0.0)) problems.push_back("'period_length' must be positive");
  if (c.clusters < 1) problems.push_back("'clusters' must be positive");
  for (int s : c.steps) {
    if (s < 1) {
      problems.push_back("step count " + std::to_string(s) + " must be positive");
    } else if (c.clusters >= 1 && c.clusters % s != 0) {
      problems.push_back("'clusters' (" + std::to_string(c.clusters) +
                         ") is not a multiple of step count " + std::to_string(s));
    }
  }
  const auto& o = c.overrides;
  for (auto [value, key] : {std::pair{o.sigma2_cluster, "sigma2_cluster"},
                            std::pair{o.sigma2_participant, "sigma2_participant"},
                            std::pair{o.sigma2_residual, "sigma2_residual"}})
    if (value && !(*value >= 0.0)) problems.push_back(std::string("'overrides.") + key + "' must be >= 0");
  if (o.widow_hazard && !(*o.widow_hazard >= 0.0 && *o.widow_hazard <= 1.0))
    problems.push_back("'overrides.widow_hazard' must lie in [0, 1]");
  if (o.attrition_rate && !(*o.attrition_rate >= 0.0 && *o.attrition_rate < 1.0))
    problems.push_back("'overrides.attrition_rate' must lie in [0, 1)");
  if (o.cluster_size && *o.cluster_size < 1)
    problems.push_back("'overrides.cluster_size' must be positive");
  if (o.secular_trend && !o.secular_trend->empty() && o.secular_trend->front() != 0.0)
    problems.push_back("'overrides.secular_trend' must start with 0 (period 0 is the reference)");

  // Every grid cell must resolve to a usable scenario.
  if (problems.empty()) {
    for (const auto& s : c.scenarios) {
      for (int steps : c.steps) {
        try {
          const auto sc = resolve_scenario(c, s, 0.0, steps);
          if (sc.secular_trend.size() < static_cast<std::size_t>(steps + 1))
            problems.push_back("scenario '" + s + "' with " + std::to_string(steps) +
                               " steps needs a secular trend of " + std::to_string(steps + 1) +
                               " entries");
        } catch (const std::exception& e) {
          problems.push_back("scenario '" + s + "' with " + std::to_string(steps) +
                             " steps: " + e.what());
        }
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"scenarios", c.scenarios},   {"thetas", c.thetas},
          {"steps", c.steps},           {"models", c.models},
          {"reps", c.reps},             {"seed", c.seed},
          {"workers", c.workers},       {"out", c.out},
          {"alpha", c.alpha},           {"rerandomize", c.rerandomize},
          {"clusters", c.clusters},     {"period_length", c.period_length},
          {"overrides", overrides_to_json(c.overrides)}};
}

std::string config_hash(const RunConfig& c) {
  // Worker count and output location do not affect results.
  auto j = to_json(c);
  j.erase("workers");
  j.erase("out");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

ScenarioConfig resolve_scenario(const RunConfig& c, const std::string& name, double theta,
                                int steps) {
  ScenarioConfig sc;
  // Presets c and d only define the trend up to 8 steps; a long enough
  // override makes larger designs valid.
  if ((name == "c" || name == "d") && c.overrides.secular_trend &&
      static_cast<std::size_t>(steps + 1) > lockdown_trend().size()) {
    sc = scenario_preset("a", theta, steps);
    sc.name = name;
    if (name == "d") sc.cohort = CohortMode::open;
  } else {
    sc = scenario_preset(name, theta, steps);
  }
  c.overrides.apply(sc);
  return sc;
}

GridSpec make_grid(const RunConfig& c) {
  GridSpec g;
  g.scenarios = c.scenarios;
  g.thetas = c.thetas;
  g.steps = c.steps;
  g.models = c.models;
  g.n_reps = c.reps;
  g.master_seed = c.seed;
  g.workers = c.workers;
  g.n_clusters = c.clusters;
  g.period_length = c.period_length;
  g.analysis.alpha = c.alpha;
  g.analysis.rerandomize = c.rerandomize;
  g.make_scenario = [c](const std::string& name, double theta, int steps) {
    return resolve_scenario(c, name, theta, steps);
  };
  return g;
}

}  // namespace swsim
