#include "swsim/design.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace swsim {

int TrialDesign::exposed_cell_count() const {
  int count = 0;
  for (int i = 0; i < n_clusters; ++i)
    for (int j = 0; j < n_periods(); ++j) count += exposed(i, j) ? 1 : 0;
  return count;
}

TrialDesign standard_swd(int n_clusters, int n_steps, double period_length) {
  if (n_steps < 1) throw std::invalid_argument("number of steps must be positive");
  if (n_clusters < 1) throw std::invalid_argument("number of clusters must be positive");
  if (!(period_length > 0.0)) throw std::invalid_argument("period length must be positive");
  if (n_clusters < n_steps || n_clusters % n_steps != 0)
    throw std::invalid_argument("number of clusters (" + std::to_string(n_clusters) +
                                ") must be a multiple of the number of steps (" +
                                std::to_string(n_steps) + ")");

  TrialDesign design;
  design.n_clusters = n_clusters;
  design.n_steps = n_steps;
  design.period_length = period_length;
  design.allocation.resize(n_clusters);
  const int per_group = n_clusters / n_steps;
  for (int i = 0; i < n_clusters; ++i) design.allocation[i] = 1 + i / per_group;
  return design;
}

TrialDesign randomize_allocation(const TrialDesign& design, const RandomStream& stream) {
  TrialDesign out = design;
  auto engine = stream.engine();
  // Fisher-Yates with our own uniform draw so the permutation is portable.
  for (int i = static_cast<int>(out.allocation.size()) - 1; i > 0; --i) {
    const auto j = static_cast<int>(engine() % static_cast<std::uint64_t>(i + 1));
    std::swap(out.allocation[i], out.allocation[j]);
  }
  return out;
}

void write_design_csv(std::ostream& out, const TrialDesign& design) {
  out << "cluster,group,period,exposed\n";
  for (int i = 0; i < design.n_clusters; ++i)
    for (int j = 0; j < design.n_periods(); ++j)
      out << i + 1 << ',' << design.allocation[i] << ',' << j << ','
          << (design.exposed(i, j) ? 1 : 0) << '\n';
}

}  // namespace swsim
