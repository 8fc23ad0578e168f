#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swsim/modelspec.hpp"

namespace swsim {

/// Variances of the cluster intercept, participant intercept and residual.
struct VarianceComponents {
  double cluster = 0.0;
  double participant = 0.0;
  double residual = 1.0;

  bool operator==(const VarianceComponents&) const = default;
};

/// Cross-products of a two-level nested random-intercept model, precomputed
/// once so that each evaluation at new variance ratios costs
/// O(participants * p^2) and never forms an N x N matrix.
///
/// With relative covariance V = I + gc Zc Zc' + gd Zd Zd', the mixed-model
/// equations in the random effects (participants first, then clusters)
/// factor in closed form: the participant block is diagonal and, because
/// participants nest in clusters, so is the cluster Schur complement. The
/// remaining fixed-effect block is X' V^-1 X.
class MixedModelSystem {
 public:
  explicit MixedModelSystem(const ModelMatrices& matrices);

  struct Evaluation {
    Eigen::MatrixXd xtvx;  // X' V^-1 X
    Eigen::LLT<Eigen::MatrixXd> xtvx_llt;
    Eigen::VectorXd beta;  // GLS estimate, in original (uncentred) units
    double pwrss = 0.0;    // r' V^-1 r, floored
    double logdet_v = 0.0;
    double logdet_xtvx = 0.0;
  };

  /// Throws std::runtime_error naming the offending columns if X' V^-1 X is singular.
  Evaluation evaluate(double gamma_cluster, double gamma_participant) const;

  /// Profiled -2 log restricted likelihood at the given ratios.
  double profiled_criterion(const Evaluation& e) const;
  /// Non-profiled -2 log restricted likelihood at absolute variances.
  double deviance(const Evaluation& e, double sigma2_residual) const;

  Eigen::Index n_obs() const { return n_obs_; }
  Eigen::Index n_fixed() const { return n_fixed_; }
  int n_clusters() const { return static_cast<int>(cluster_n_.size()); }
  int n_participants() const { return static_cast<int>(participant_n_.size()); }
  double sigma2_floor() const { return sigma2_floor_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Eigen::Index n_obs_ = 0;
  Eigen::Index n_fixed_ = 0;
  int intercept_column_ = -1;
  double y_offset_ = 0.0;
  double sigma2_floor_ = 0.0;
  std::vector<std::string> labels_;
  Eigen::MatrixXd wtw_;               // [X y]'[X y]
  Eigen::VectorXd participant_n_;
  Eigen::MatrixXd participant_sums_;  // participants x (p+1)
  std::vector<int> participant_cluster_;
  Eigen::VectorXd cluster_n_;
  Eigen::MatrixXd cluster_sums_;      // clusters x (p+1)
};

struct RemlValue {
  double criterion = 0.0;
  double sigma2_residual = 0.0;
  Eigen::VectorXd beta;
};

/// Profiled criterion at variance ratios gamma = sigma^2 / sigma_e^2:
/// log|V| + log|X'V^-1 X| + (N-p) (1 + log(2 pi r'V^-1 r / (N-p))).
RemlValue reml_objective(const ModelMatrices& matrices, double gamma_cluster,
                         double gamma_participant);
RemlValue reml_objective(const MixedModelSystem& system, double gamma_cluster,
                         double gamma_participant);

struct GlsResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
};

GlsResult gls_fixed_effects(const ModelMatrices& matrices, const VarianceComponents& components);
GlsResult gls_fixed_effects(const MixedModelSystem& system, const VarianceComponents& components);

/// Non-profiled -2 log restricted likelihood; requires components.residual > 0.
double reml_deviance(const MixedModelSystem& system, const VarianceComponents& components);

/// Upper limit of the searched log variance ratios. A fit pressed against it
/// is a residual-variance boundary solution (sigma_e^2 tending to zero).
inline constexpr double kMaxLogRatio = 15.0;

struct RemlOptions {
  std::vector<double> log_ratio_starts{-2.0, 0.0};  // crossed over both ratios
  std::vector<double> lattice{-6.0, -3.0, 0.0, 3.0, 6.0, 9.0};  // extra start from the best cell
  double tolerance = 1e-8;                          // on the criterion
  int max_evaluations = 500;                        // per start
  double initial_step = 0.5;
  bool polish = true;                               // finite-difference Newton refinement
  double gradient_tolerance = 1e-5;                 // on d criterion / d log gamma
};

struct LmmFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  VarianceComponents components;
  double gamma_cluster = 0.0;
  double gamma_participant = 0.0;
  double criterion = 0.0;
  bool converged = false;
  int evaluations = 0;
  double gradient_norm = 0.0;
  Eigen::Index n_obs = 0;
  Eigen::Index n_fixed = 0;
  int n_clusters = 0;
  int n_participants = 0;
  std::vector<std::string> labels;

  double standard_error(Eigen::Index column) const { return std::sqrt(covariance(column, column)); }
};

/// REML fit by multi-start Nelder-Mead on the log variance ratios plus
/// explicit boundary fits with either or both ratios fixed at zero.
/// Throws std::invalid_argument when the data cannot identify the model.
LmmFit fit_reml(const ModelMatrices& matrices, const RemlOptions& options = {});
LmmFit fit_reml(const MixedModelSystem& system, const RemlOptions& options = {});

}  // namespace swsim
