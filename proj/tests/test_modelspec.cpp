#include <map>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "swsim/harness.hpp"
#include "swsim/modelspec.hpp"

using namespace swsim;

namespace {

const std::vector<std::string> kPeriods4{"period1", "period2", "period3", "period4"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("modelspec") {

TEST_CASE("column layout of the six formulations") {
  const auto trial = simulate_trial(scenario_preset("a", 0.5, 4), standard_swd(48, 4), 1);
  const std::vector<std::string> base{"(Intercept)", "exposed"};
  const std::vector<std::vector<std::string>> expected{
      base,
      concat(base, {"baseline_age", "baseline_widowed"}),
      concat(base, {"age", "widowed"}),
      concat(base, kPeriods4),
      concat(concat(base, kPeriods4), {"baseline_age", "baseline_widowed"}),
      concat(concat(base, kPeriods4), {"age", "widowed"}),
  };
  for (int id = 1; id <= 6; ++id) {
    CAPTURE(id);
    const auto m = build_matrices(trial.table, formulation(id));
    CHECK(m.labels == expected[id - 1]);
    CHECK(m.rows() == static_cast<Eigen::Index>(trial.table.size()));
    CHECK(m.cols() == static_cast<Eigen::Index>(m.labels.size()));
    CHECK(std::set<std::string>(m.labels.begin(), m.labels.end()).size() == m.labels.size());
    CHECK(m.X.col(0).isOnes());
    CHECK(m.n_clusters == 48);
    CHECK(m.n_participants == 384);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto& o = trial.table.rows[r];
      CHECK(m.y[r] == o.outcome);
      CHECK(m.X(r, 1) == (o.exposed ? 1.0 : 0.0));
      CHECK(m.cluster[r] == o.cluster);
      for (int j = 1; j <= 4; ++j) {
        const int c = m.column("period" + std::to_string(j));
        if (c >= 0) CHECK(m.X(r, c) == (o.period == j ? 1.0 : 0.0));
      }
    }
  }
  CHECK(build_matrices(trial.table, formulation(4)).column("period0") == -1);
}

TEST_CASE("participants are numbered consistently across periods") {
  const auto trial = simulate_trial(scenario_preset("d", 0.5, 4), standard_swd(12, 4), 3);
  const auto m = build_matrices(trial.table, formulation(1));
  std::map<std::pair<int, int>, int> ids;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& o = trial.table.rows[r];
    const auto [it, fresh] = ids.try_emplace({o.cluster, o.participant}, m.participant[r]);
    CHECK(it->second == m.participant[r]);
  }
  CHECK(m.n_participants == static_cast<int>(ids.size()));
  std::set<int> distinct;
  for (auto& [k, v] : ids) distinct.insert(v);
  CHECK(distinct.size() == ids.size());
  CHECK(*distinct.rbegin() == m.n_participants - 1);
}

TEST_CASE("baseline and current covariates agree on period 0") {
  const auto trial = simulate_trial(scenario_preset("a", 0.0, 6), standard_swd(24, 6), 5);
  const auto m2 = build_matrices(trial.table, formulation(2));
  const auto m3 = build_matrices(trial.table, formulation(3));
  for (Eigen::Index r = 0; r < m2.rows(); ++r)
    if (trial.table.rows[r].period == 0) CHECK(m2.X.row(r) == m3.X.row(r));
}

TEST_CASE("every simulated scenario has full rank") {
  for (const char* name : {"a", "b", "c", "d"})
    for (int J : {4, 6, 8}) {
      const auto trial = simulate_trial(scenario_preset(name, 0.5, J), standard_swd(48, J), 11);
      for (int id = 1; id <= 6; ++id) CHECK_NOTHROW(build_matrices(trial.table, formulation(id)));
    }
}

TEST_CASE("collinear columns are named") {
  auto trial = simulate_trial(scenario_preset("a", 0.0, 4), standard_swd(8, 4), 2);
  // Nobody is ever widowed: the widowed column duplicates nothing but is all zero.
  for (auto& r : trial.table.rows) r.widowed = r.baseline_widowed = false;
  try {
    build_matrices(trial.table, formulation(3));
    FAIL("expected a rank error");
  } catch (const RankDeficientError& e) {
    CHECK(e.columns() == std::vector<std::string>{"widowed"});
    CHECK(std::string(e.what()).find("widowed") != std::string::npos);
  }
  // Exposure identical in every row of a period for a single-group design.
  auto one = simulate_trial(scenario_preset("a", 0.0, 1), standard_swd(4, 1), 2);
  CHECK_THROWS_AS(build_matrices(one.table, formulation(4)), RankDeficientError);
}

TEST_CASE("model id parsing") {
  CHECK(parse_model_ids("1,4") == std::vector<int>{1, 4});
  CHECK(parse_model_ids("6") == std::vector<int>{6});
  CHECK_THROWS_AS(parse_model_ids("0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_ids("7"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_ids("1,x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model_ids(""), std::invalid_argument);
  CHECK_THROWS_AS(formulation(7), std::invalid_argument);
  CHECK_THROWS_AS(build_matrices(ObservationTable{}, formulation(1)), std::invalid_argument);
}

TEST_CASE("make_matrices checks nesting") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  CHECK_NOTHROW(make_matrices(y, X, {0, 0, 1, 1}, {0, 1, 2, 3}, {"(Intercept)"}));
  CHECK_THROWS(make_matrices(y, X, {0, 0, 1, 1}, {0, 0, 0, 1}, {"(Intercept)"}));
  CHECK_THROWS(make_matrices(y, X, {0, 0, 1}, {0, 1, 2, 3}, {"(Intercept)"}));
}

}
