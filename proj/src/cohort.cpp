#include "swsim/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace swsim {

namespace {

void validate(const CohortParameters& p) {
  if (p.cluster_size < 1) throw std::invalid_argument("cluster size must be positive");
  if (!(p.widow_hazard >= 0.0 && p.widow_hazard <= 1.0))
    throw std::invalid_argument("widowhood hazard must lie in [0, 1]");
  if (!(p.attrition_rate >= 0.0 && p.attrition_rate < 1.0))
    throw std::invalid_argument("attrition rate must lie in [0, 1)");
  if (!(p.baseline_age_min <= p.baseline_age_max) || !(p.joiner_age_min <= p.joiner_age_max))
    throw std::invalid_argument("age range is empty");
}

// Starts a trajectory at `entry` and records the entry-period state.
ParticipantTrajectory enter(int cluster, int participant, int entry, double age_min,
                            double age_max, double hazard, const RandomStream& stream) {
  ParticipantTrajectory t;
  t.cluster = cluster;
  t.participant = participant;
  t.entry_period = entry;
  auto age_engine = stream.child(Purpose::baseline_age, cluster, participant).engine();
  t.age.push_back(age_min + (age_max - age_min) * age_engine.uniform());
  auto widow_engine = stream.child(Purpose::widowhood, cluster, participant).engine();
  t.widowed.push_back(advance_widowhood(false, hazard, widow_engine));
  return t;
}

// Extends a trajectory through `last_period` inclusive. The widowhood stream
// is replayed from the start so the path depends only on (cluster, participant).
void extend(ParticipantTrajectory& t, int last_period, double period_length, double hazard,
            const RandomStream& stream) {
  auto widow_engine = stream.child(Purpose::widowhood, t.cluster, t.participant).engine();
  for (std::size_t s = 0; s < t.widowed.size(); ++s) widow_engine();
  for (int j = t.entry_period + static_cast<int>(t.age.size()); j <= last_period; ++j) {
    t.age.push_back(t.age.back() + period_length);
    t.widowed.push_back(advance_widowhood(t.widowed.back(), hazard, widow_engine));
  }
}

}  // namespace

int CohortPanel::active_count(int cluster, int period) const {
  int count = 0;
  for (const auto& t : trajectories)
    if (t.cluster == cluster && t.active(period, design.n_periods())) ++count;
  return count;
}

bool advance_widowhood(bool current, double hazard, SplitMix64& engine) {
  const bool event = engine.uniform() < hazard;
  return current || event;
}

CohortPanel generate_closed_cohort(const TrialDesign& design, const CohortParameters& params,
                                   const RandomStream& stream) {
  validate(params);
  CohortPanel panel;
  panel.design = design;
  panel.mode = CohortMode::closed;
  const int last = design.n_periods() - 1;
  panel.trajectories.reserve(static_cast<std::size_t>(design.n_clusters) * params.cluster_size);
  for (int i = 0; i < design.n_clusters; ++i) {
    for (int k = 0; k < params.cluster_size; ++k) {
      auto t = enter(i, k, 0, params.baseline_age_min, params.baseline_age_max,
                     params.widow_hazard, stream);
      extend(t, last, design.period_length, params.widow_hazard, stream);
      panel.trajectories.push_back(std::move(t));
    }
  }
  return panel;
}

CohortPanel generate_open_cohort(const TrialDesign& design, const CohortParameters& params,
                                 const RandomStream& stream) {
  validate(params);
  CohortPanel panel;
  panel.design = design;
  panel.mode = CohortMode::open;
  panel.attrition_rate = params.attrition_rate;
  const int last = design.n_periods() - 1;
  const double expected_leavers = params.attrition_rate * params.cluster_size;
  const int base_leavers = static_cast<int>(std::floor(expected_leavers));
  const double extra_probability = expected_leavers - base_leavers;

  for (int i = 0; i < design.n_clusters; ++i) {
    std::vector<ParticipantTrajectory> cluster;
    std::vector<std::size_t> active;
    for (int k = 0; k < params.cluster_size; ++k) {
      cluster.push_back(enter(i, k, 0, params.baseline_age_min, params.baseline_age_max,
                              params.widow_hazard, stream));
      active.push_back(cluster.size() - 1);
    }
    int next_id = params.cluster_size;

    for (int j = 1; j <= last; ++j) {
      for (auto idx : active) extend(cluster[idx], j - 1, design.period_length,
                                     params.widow_hazard, stream);
      int leavers = base_leavers;
      if (extra_probability > 0.0) {
        auto engine = stream.child(Purpose::attrition, i, j).engine();
        if (engine.uniform() < extra_probability) ++leavers;
      }
      leavers = std::min(leavers, static_cast<int>(active.size()));
      if (leavers == 0) continue;

      // Oldest first; equal ages leave in participant order.
      std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
        const double age_a = cluster[a].age_at(j - 1), age_b = cluster[b].age_at(j - 1);
        if (age_a != age_b) return age_a > age_b;
        return cluster[a].participant < cluster[b].participant;
      });
      for (int n = 0; n < leavers; ++n) cluster[active[n]].exit_period = j - 1;
      active.erase(active.begin(), active.begin() + leavers);
      for (int n = 0; n < leavers; ++n) {
        cluster.push_back(enter(i, next_id++, j, params.joiner_age_min, params.joiner_age_max,
                                params.widow_hazard, stream));
        active.push_back(cluster.size() - 1);
      }
    }
    for (auto idx : active) extend(cluster[idx], last, design.period_length,
                                   params.widow_hazard, stream);
    for (auto& t : cluster) panel.trajectories.push_back(std::move(t));
  }
  return panel;
}

void write_panel_csv(std::ostream& out, const CohortPanel& panel) {
  const int n_periods = panel.design.n_periods();
  out << "cluster,participant,period,age,widowed,active\n";
  char buf[32];
  for (const auto& t : panel.trajectories) {
    for (int j = 0; j < n_periods; ++j) {
      out << t.cluster + 1 << ',' << t.participant + 1 << ',' << j << ',';
      if (t.active(j, n_periods)) {
        std::snprintf(buf, sizeof buf, "%.17g", t.age_at(j));
        out << buf << ',' << (t.widowed_at(j) ? 1 : 0) << ",1\n";
      } else {
        out << ",,0\n";
      }
    }
  }
}

}  // namespace swsim
