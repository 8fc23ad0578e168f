#pragma once

#include <iosfwd>
#include <vector>

#include "swsim/random.hpp"

namespace swsim {

/// Standard stepped-wedge layout. Periods run 0..n_steps with period 0 an
/// all-control baseline; a cluster in group g is exposed from period g on.
/// Clusters and groups are 0-based and 1-based respectively.
struct TrialDesign {
  int n_clusters = 0;
  int n_steps = 0;
  double period_length = 0.5;
  std::vector<int> allocation;  // cluster -> group in 1..n_steps

  int n_periods() const { return n_steps + 1; }
  bool exposed(int cluster, int period) const { return period >= allocation.at(cluster); }
  int exposed_cell_count() const;

  bool operator==(const TrialDesign&) const = default;
};

/// Balanced design with clusters assigned to groups in cluster order.
/// Throws std::invalid_argument unless n_clusters is a positive multiple of n_steps.
TrialDesign standard_swd(int n_clusters, int n_steps, double period_length = 0.5);

/// Uniformly random permutation of the allocation; group sizes are preserved.
TrialDesign randomize_allocation(const TrialDesign& design, const RandomStream& stream);

/// Columns: cluster, group, period, exposed.
void write_design_csv(std::ostream& out, const TrialDesign& design);

}  // namespace swsim
