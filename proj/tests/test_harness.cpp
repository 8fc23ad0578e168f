#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

#include "doctest.h"
#include "swsim/harness.hpp"

using namespace swsim;

namespace {

// Everything except wall time, which is a measurement.
auto key(const ReplicateResult& r) {
  return std::tie(r.scenario, r.theta, r.steps, r.replicate, r.model, r.estimate, r.standard_error,
                  r.df, r.p_value, r.significant, r.components.cluster, r.components.participant,
                  r.components.residual, r.converged, r.error);
}

std::vector<ReplicateResult> collect(const GridSpec& spec) {
  std::vector<ReplicateResult> out;
  run_grid(spec, [&](const ReplicateResult& r) { out.push_back(r); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return key(a) < key(b); });
  return out;
}

ReplicateResult record(double estimate, double se, bool significant, bool converged = true) {
  ReplicateResult r;
  r.scenario = "a";
  r.theta = 0.5;
  r.steps = 4;
  r.model = 4;
  r.estimate = estimate;
  r.standard_error = se;
  r.significant = significant;
  r.converged = converged;
  return r;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("one replicate fits every model to the same data") {
  const auto design = standard_swd(48, 4);
  const auto sc = scenario_preset("c", 0.5, 4);
  const auto a = run_replicate(sc, design, {1, 2, 3, 4, 5, 6}, 99, 7);
  REQUIRE(a.size() == 6);
  for (int m = 0; m < 6; ++m) {
    CHECK(a[m].model == m + 1);
    CHECK(a[m].scenario == "c");
    CHECK(a[m].theta == 0.5);
    CHECK(a[m].steps == 4);
    CHECK(a[m].replicate == 7);
    CHECK(a[m].converged);
    CHECK(a[m].error.empty());
    CHECK(a[m].wall_time >= 0.0);
    CHECK(a[m].df > 0.0);
  }
  const auto b = run_replicate(sc, design, {1, 2, 3, 4, 5, 6}, 99, 7);
  for (int m = 0; m < 6; ++m) CHECK(key(a[m]) == key(b[m]));
  const auto c = run_replicate(sc, design, {1, 2, 3, 4, 5, 6}, 100, 7);
  CHECK(c[0].estimate != a[0].estimate);
}

TEST_CASE("noiseless data give the true effect under every model") {
  for (const char* name : {"a", "d"}) {
    auto sc = scenario_preset(name, 0.75, 4);
    sc.sigma2_cluster = sc.sigma2_participant = sc.sigma2_residual = 0.0;
    sc.age_effect = 0.0;
    sc.widowed_effect = 0.0;
    sc.secular_trend.assign(5, 0.0);
    for (const auto& r : run_replicate(sc, standard_swd(48, 4), {1, 2, 3, 4, 5, 6}, 5)) {
      CAPTURE(r.model);
      CHECK(std::abs(r.estimate - 0.75) < 1e-6);
    }
  }
}

TEST_CASE("fit failures are recorded, not thrown") {
  // With one step, exposure equals the period-1 indicator.
  const auto records = run_replicate(scenario_preset("a", 0.5, 1), standard_swd(4, 1), {1, 4}, 3);
  REQUIRE(records.size() == 2);
  CHECK(records[0].converged);
  CHECK_FALSE(records[1].converged);
  CHECK(std::isnan(records[1].estimate));
  INFO(records[1].error);
  CHECK(records[1].error.find("period1") != std::string::npos);
}

TEST_CASE("grid size and worker independence") {
  GridSpec spec;
  spec.scenarios = {"a"};
  spec.thetas = {0.0, 0.5};
  spec.steps = {4};
  spec.models = {1, 4};
  spec.n_reps = 10;
  spec.master_seed = 3;
  spec.n_clusters = 12;
  spec.workers = 1;
  const auto serial = collect(spec);
  CHECK(serial.size() == 40);
  std::set<std::tuple<double, int, int>> cells;
  for (const auto& r : serial) cells.insert({r.theta, r.replicate, r.model});
  CHECK(cells.size() == 40);
  spec.workers = 8;
  const auto parallel = collect(spec);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t n = 0; n < serial.size(); ++n) CHECK(key(parallel[n]) == key(serial[n]));
}

TEST_CASE("replicate seeds are distinct per cell") {
  std::set<std::uint64_t> seeds;
  for (const char* s : {"a", "b"})
    for (double theta : {0.0, 0.25})
      for (int steps : {4, 8})
        for (int rep = 0; rep < 50; ++rep) seeds.insert(replicate_seed(1, s, theta, steps, rep));
  CHECK(seeds.size() == 2 * 2 * 2 * 50);
  CHECK(replicate_seed(1, "a", 0.0, 4, 0) != replicate_seed(2, "a", 0.0, 4, 0));
  CHECK(replicate_seed(1, "a", 0.0, 4, 0) != replicate_seed(1, "a", -0.0, 4, 0));
  CHECK(replicate_seed(1, "a", 0.0, 4, 0) == replicate_seed(1, "a", 0.0, 4, 0));
}

TEST_CASE("a failing sink stops the run") {
  GridSpec spec;
  spec.n_reps = 20;
  spec.n_clusters = 8;
  spec.workers = 2;
  int calls = 0;
  CHECK_THROWS_AS(run_grid(spec,
                           [&](const ReplicateResult&) {
                             if (++calls == 3) throw std::runtime_error("disk full");
                           }),
                  std::runtime_error);
  CHECK(calls < 20);
}

TEST_CASE("summary arithmetic") {
  const std::vector<ReplicateResult> group{record(0.2, 0.3, false), record(0.5, 0.4, true),
                                           record(1.1, 0.5, true), record(9.0, 1.0, true, false)};
  const auto s = summarize(group);
  REQUIRE(s.size() == 1);
  const auto& g = s[0];
  CHECK(g.n_reps == 4);
  CHECK(g.n_converged == 3);
  CHECK(g.mean_estimate == doctest::Approx(0.6));
  CHECK(g.bias + g.theta == g.mean_estimate);
  // Deviations -0.4, -0.1, 0.5: sum of squares 0.42, variance 0.21.
  CHECK(g.empirical_sd == doctest::Approx(std::sqrt(0.21)));
  CHECK(g.mc_se == doctest::Approx(std::sqrt(0.21 / 3)));
  CHECK(g.mean_se == doctest::Approx(0.4));
  CHECK(g.power == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("degenerate summaries") {
  const auto s = summarize({record(0.5, 0.1, false), record(0.5, 0.1, false)});
  CHECK(s[0].bias == 0.0);
  CHECK(s[0].empirical_sd == 0.0);
  CHECK(s[0].power == 0.0);
  const auto single = summarize({record(0.3, 0.1, true)});
  CHECK(std::isnan(single[0].empirical_sd));
  CHECK(single[0].power == 1.0);
  const auto none = summarize({record(0.3, 0.1, true, false)});
  CHECK(none[0].n_converged == 0);
  CHECK(std::isnan(none[0].mean_estimate));
}

TEST_CASE("summaries are grouped and ordered by key") {
  std::vector<ReplicateResult> rs;
  for (int model : {4, 1})
    for (double theta : {0.5, 0.0}) {
      auto r = record(theta, 0.1, false);
      r.model = model;
      r.theta = theta;
      rs.push_back(r);
      rs.push_back(r);
    }
  const auto s = summarize(rs);
  REQUIRE(s.size() == 4);
  CHECK(std::tie(s[0].theta, s[0].model) == std::tuple{0.0, 1});
  CHECK(std::tie(s[1].theta, s[1].model) == std::tuple{0.0, 4});
  CHECK(std::tie(s[2].theta, s[2].model) == std::tuple{0.5, 1});
  CHECK(std::tie(s[3].theta, s[3].model) == std::tuple{0.5, 4});
  for (const auto& g : s) CHECK(g.n_reps == 2);
}

}
