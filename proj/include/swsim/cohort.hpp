#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "swsim/design.hpp"
#include "swsim/random.hpp"

namespace swsim {

enum class CohortMode { closed, open };

struct CohortParameters {
  int cluster_size = 8;
  double attrition_rate = 0.15;  // open mode only
  double widow_hazard = 0.05;    // per period, also the probability at entry
  double baseline_age_min = 18.0;
  double baseline_age_max = 102.0;
  double joiner_age_min = 18.0;
  double joiner_age_max = 96.0;

  bool operator==(const CohortParameters&) const = default;
};

/// One participant observed from entry_period through exit_period (inclusive).
struct ParticipantTrajectory {
  int cluster = 0;
  int participant = 0;  // unique within the cluster over the whole trial
  int entry_period = 0;
  std::optional<int> exit_period;  // empty: observed until the end of the trial
  std::vector<double> age;         // one entry per observed period
  std::vector<bool> widowed;

  int last_period(int n_periods) const { return exit_period.value_or(n_periods - 1); }
  bool active(int period, int n_periods) const {
    return period >= entry_period && period <= last_period(n_periods);
  }
  double age_at(int period) const { return age.at(period - entry_period); }
  bool widowed_at(int period) const { return widowed.at(period - entry_period); }
};

struct CohortPanel {
  TrialDesign design;
  CohortMode mode = CohortMode::closed;
  double attrition_rate = 0.0;
  std::vector<ParticipantTrajectory> trajectories;  // ordered by (cluster, participant)

  int active_count(int cluster, int period) const;
};

/// Absorbing transition: a widowed participant stays widowed, otherwise
/// becomes widowed with probability `hazard`. Always consumes one draw.
bool advance_widowhood(bool current, double hazard, SplitMix64& engine);

CohortPanel generate_closed_cohort(const TrialDesign& design, const CohortParameters& params,
                                   const RandomStream& stream);

/// At the start of each period j >= 1 the oldest participants of every cluster
/// leave (last observed period j - 1) and are replaced one-for-one by joiners.
/// The number leaving is floor(rate * size) plus one more with probability
/// equal to the fractional remainder.
CohortPanel generate_open_cohort(const TrialDesign& design, const CohortParameters& params,
                                 const RandomStream& stream);

/// Columns: cluster, participant, period, age, widowed, active. Inactive
/// periods carry empty age and widowed fields.
void write_panel_csv(std::ostream& out, const CohortPanel& panel);

}  // namespace swsim
