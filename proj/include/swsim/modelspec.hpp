#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swsim/outcome.hpp"

namespace swsim {

enum class FixedTerm {
  intercept,
  exposure,
  period,  // one indicator per period 1..J, period 0 is the reference
  baseline_age,
  baseline_widowed,
  age,
  widowed,
};

/// One of the six analysis models. All carry random cluster and participant intercepts.
struct ModelFormulation {
  int id = 1;
  std::vector<FixedTerm> terms;
};

/// 1: unadjusted, 2: baseline covariates, 3: current covariates,
/// 4: period effects, 5: period effects + baseline, 6: period effects + current.
ModelFormulation formulation(int id);

/// Parses "1,4,6" style lists. Throws std::invalid_argument on anything outside 1..6.
std::vector<int> parse_model_ids(const std::string& text);

struct ModelMatrices {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<int> cluster;      // 0-based cluster index per row
  std::vector<int> participant;  // 0-based global participant index per row
  int n_clusters = 0;
  int n_participants = 0;
  std::vector<std::string> labels;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  /// Column of the named term, or -1.
  int column(const std::string& label) const;
};

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(std::vector<std::string> columns, const std::string& what)
      : std::runtime_error(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

/// Builds X in the formulation's term order. Throws RankDeficientError when X
/// is not of full column rank and std::invalid_argument on an empty table.
ModelMatrices build_matrices(const ObservationTable& table, const ModelFormulation& formulation);

/// Assembles matrices from raw parts; participants must be nested within clusters.
ModelMatrices make_matrices(Eigen::VectorXd y, Eigen::MatrixXd X, std::vector<int> cluster,
                            std::vector<int> participant, std::vector<std::string> labels);

}  // namespace swsim
