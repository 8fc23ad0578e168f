#include "swsim/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "swsim/nelder_mead.hpp"

namespace swsim {

namespace {

constexpr double kLogRatioMin = -30.0;
constexpr double kOutOfRange = 1e300;

int find_intercept(const Eigen::MatrixXd& X) {
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    if ((X.col(c).array() == 1.0).all()) return static_cast<int>(c);
  return -1;
}

}  // namespace

MixedModelSystem::MixedModelSystem(const ModelMatrices& m)
    : n_obs_(m.rows()), n_fixed_(m.cols()), labels_(m.labels) {
  const Eigen::Index p = n_fixed_;
  intercept_column_ = find_intercept(m.X);
  // Centring y on an intercept model changes only the intercept estimate and
  // keeps r'V^-1 r free of cancellation against the mean.
  y_offset_ = intercept_column_ >= 0 ? m.y.mean() : 0.0;

  Eigen::MatrixXd W(n_obs_, p + 1);
  W.leftCols(p) = m.X;
  W.col(p) = m.y.array() - y_offset_;

  wtw_ = Eigen::MatrixXd::Zero(p + 1, p + 1);
  wtw_.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
  wtw_ = wtw_.selfadjointView<Eigen::Lower>();

  participant_n_ = Eigen::VectorXd::Zero(m.n_participants);
  participant_sums_ = Eigen::MatrixXd::Zero(m.n_participants, p + 1);
  participant_cluster_.assign(m.n_participants, 0);
  cluster_n_ = Eigen::VectorXd::Zero(m.n_clusters);
  cluster_sums_ = Eigen::MatrixXd::Zero(m.n_clusters, p + 1);
  for (Eigen::Index r = 0; r < n_obs_; ++r) {
    const int k = m.participant[r], i = m.cluster[r];
    participant_n_[k] += 1.0;
    participant_sums_.row(k) += W.row(r);
    participant_cluster_[k] = i;
    cluster_n_[i] += 1.0;
    cluster_sums_.row(i) += W.row(r);
  }

  const double mean = m.y.mean();
  const double var = n_obs_ > 1 ? (m.y.array() - mean).square().sum() / (n_obs_ - 1) : 0.0;
  sigma2_floor_ = 1e-10 * (var > 0.0 ? var : 1.0);
}

MixedModelSystem::Evaluation MixedModelSystem::evaluate(double gc, double gd) const {
  const Eigen::Index p = n_fixed_;
  const auto q_d = participant_n_.size();
  const auto n_c = cluster_n_.size();

  // Participant rows of the triangular factor: sqrt(gd) w_k / sqrt(1 + gd n_k).
  const Eigen::ArrayXd d_diag = 1.0 + gd * participant_n_.array();
  Eigen::MatrixXd lp = participant_sums_;
  lp.array().colwise() *= (gd / d_diag).sqrt();

  // Cluster Schur complement S_i = 1 + gc sum_k n_k / (1 + gd n_k) and rows
  // sqrt(gc) (w_i - sum_k gd n_k w_k / (1 + gd n_k)) / sqrt(S_i).
  Eigen::ArrayXd schur = Eigen::ArrayXd::Ones(n_c);
  Eigen::MatrixXd lc = cluster_sums_;
  const Eigen::ArrayXd shrink = gd * participant_n_.array() / d_diag;
  for (Eigen::Index k = 0; k < q_d; ++k) {
    const int i = participant_cluster_[k];
    schur[i] += gc * participant_n_[k] / d_diag[k];
    lc.row(i) -= shrink[k] * participant_sums_.row(k);
  }
  lc.array().colwise() *= (gc / schur).sqrt();

  Eigen::MatrixXd g = wtw_;
  g.selfadjointView<Eigen::Lower>().rankUpdate(lp.transpose(), -1.0);
  g.selfadjointView<Eigen::Lower>().rankUpdate(lc.transpose(), -1.0);
  g = g.selfadjointView<Eigen::Lower>();

  Evaluation e;
  e.logdet_v = d_diag.log().sum() + schur.log().sum();
  e.xtvx = g.topLeftCorner(p, p);
  e.xtvx_llt.compute(e.xtvx);
  // A pivot that removes all but a 1e-12 share of its column's weighted
  // norm means that column is a combination of the earlier ones.
  const Eigen::ArrayXd pivots = e.xtvx_llt.matrixLLT().diagonal().array().square();
  if (e.xtvx_llt.info() != Eigen::Success ||
      (pivots <= 1e-12 * e.xtvx.diagonal().array()).any()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(e.xtvx);
    std::string what = "singular fixed-effect normal equations (rank " +
                       std::to_string(qr.rank()) + " of " + std::to_string(p) + "); suspect:";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index c = qr.rank(); c < p; ++c) what += " " + labels_[perm[c]];
    throw std::runtime_error(what);
  }
  e.logdet_xtvx = 2.0 * e.xtvx_llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd xtvy = g.col(p).head(p);
  e.beta = e.xtvx_llt.solve(xtvy);
  const double pwrss = g(p, p) - xtvy.dot(e.beta);
  e.pwrss = std::max(pwrss, sigma2_floor_ * static_cast<double>(n_obs_ - p));
  if (intercept_column_ >= 0) e.beta[intercept_column_] += y_offset_;
  return e;
}

double MixedModelSystem::profiled_criterion(const Evaluation& e) const {
  const double dof = static_cast<double>(n_obs_ - n_fixed_);
  return e.logdet_v + e.logdet_xtvx +
         dof * (1.0 + std::log(2.0 * std::numbers::pi * e.pwrss / dof));
}

double MixedModelSystem::deviance(const Evaluation& e, double sigma2) const {
  const double dof = static_cast<double>(n_obs_ - n_fixed_);
  return dof * std::log(2.0 * std::numbers::pi * sigma2) + e.logdet_v + e.logdet_xtvx +
         e.pwrss / sigma2;
}

RemlValue reml_objective(const MixedModelSystem& system, double gc, double gd) {
  if (!(gc >= 0.0) || !(gd >= 0.0)) throw std::invalid_argument("variance ratios must be >= 0");
  const auto e = system.evaluate(gc, gd);
  RemlValue v;
  v.criterion = system.profiled_criterion(e);
  v.sigma2_residual = e.pwrss / static_cast<double>(system.n_obs() - system.n_fixed());
  v.beta = e.beta;
  return v;
}

RemlValue reml_objective(const ModelMatrices& matrices, double gc, double gd) {
  return reml_objective(MixedModelSystem(matrices), gc, gd);
}

GlsResult gls_fixed_effects(const MixedModelSystem& system, const VarianceComponents& vc) {
  if (!(vc.residual > 0.0) || vc.cluster < 0.0 || vc.participant < 0.0)
    throw std::invalid_argument("invalid variance components");
  const auto e = system.evaluate(vc.cluster / vc.residual, vc.participant / vc.residual);
  GlsResult r;
  r.beta = e.beta;
  r.covariance = vc.residual * e.xtvx_llt.solve(
                                   Eigen::MatrixXd::Identity(system.n_fixed(), system.n_fixed()));
  return r;
}

GlsResult gls_fixed_effects(const ModelMatrices& matrices, const VarianceComponents& vc) {
  return gls_fixed_effects(MixedModelSystem(matrices), vc);
}

double reml_deviance(const MixedModelSystem& system, const VarianceComponents& vc) {
  if (!(vc.residual > 0.0) || vc.cluster < 0.0 || vc.participant < 0.0)
    throw std::invalid_argument("invalid variance components");
  const auto e = system.evaluate(vc.cluster / vc.residual, vc.participant / vc.residual);
  return system.deviance(e, vc.residual);
}

namespace {

// A search over the log ratios with some ratios pinned at zero.
struct Subspace {
  bool cluster_free;
  bool participant_free;

  Eigen::Index dim() const { return (cluster_free ? 1 : 0) + (participant_free ? 1 : 0); }
  std::pair<double, double> ratios(const Eigen::VectorXd& z) const {
    Eigen::Index c = 0;
    const double gc = cluster_free ? std::exp(z[c++]) : 0.0;
    const double gd = participant_free ? std::exp(z[c]) : 0.0;
    return {gc, gd};
  }
};

struct Candidate {
  Subspace space;
  Eigen::VectorXd z;
  double value = 0.0;
  bool converged = false;
};

double criterion_at(const MixedModelSystem& system, const Subspace& space,
                    const Eigen::VectorXd& z) {
  for (Eigen::Index c = 0; c < z.size(); ++c)
    if (!(z[c] >= kLogRatioMin && z[c] <= kMaxLogRatio)) return kOutOfRange;
  const auto [gc, gd] = space.ratios(z);
  return system.profiled_criterion(system.evaluate(gc, gd));
}

Eigen::VectorXd fd_gradient(const MixedModelSystem& system, const Subspace& space,
                            const Eigen::VectorXd& z, double h, int& evaluations) {
  Eigen::VectorXd g(z.size());
  for (Eigen::Index c = 0; c < z.size(); ++c) {
    Eigen::VectorXd up = z, down = z;
    up[c] += h;
    down[c] -= h;
    g[c] = (criterion_at(system, space, up) - criterion_at(system, space, down)) / (2.0 * h);
    evaluations += 2;
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const MixedModelSystem& system, const Subspace& space,
                           const Eigen::VectorXd& z, double f0, double h, int& evaluations) {
  const Eigen::Index n = z.size();
  Eigen::MatrixXd H(n, n);
  auto at = [&](Eigen::Index a, double da, Eigen::Index b, double db) {
    Eigen::VectorXd x = z;
    x[a] += da;
    x[b] += db;
    ++evaluations;
    return criterion_at(system, space, x);
  };
  for (Eigen::Index a = 0; a < n; ++a) {
    H(a, a) = (at(a, h, a, 0.0) - 2.0 * f0 + at(a, -h, a, 0.0)) / (h * h);
    for (Eigen::Index b = 0; b < a; ++b) {
      H(a, b) = H(b, a) =
          (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) / (4 * h * h);
    }
  }
  return H;
}

// Newton refinement on finite differences; NM alone leaves the ratios
// accurate only to roughly the square root of its criterion tolerance.
void polish(const MixedModelSystem& system, Candidate& cand, int& evaluations) {
  for (int iter = 0; iter < 20; ++iter) {
    const Eigen::VectorXd g = fd_gradient(system, cand.space, cand.z, 1e-4, evaluations);
    const Eigen::MatrixXd H = fd_hessian(system, cand.space, cand.z, cand.value, 1e-3, evaluations);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return;
    const Eigen::VectorXd step = -llt.solve(g);
    if (!step.allFinite()) return;
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 12 && !accepted; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = cand.z + t * step;
      const double f = criterion_at(system, cand.space, trial);
      ++evaluations;
      if (f <= cand.value) {
        cand.z = trial;
        cand.value = f;
        accepted = true;
      }
    }
    if (!accepted || step.cwiseAbs().maxCoeff() < 1e-10) return;
  }
}

}  // namespace

LmmFit fit_reml(const MixedModelSystem& system, const RemlOptions& options) {
  if (system.n_obs() <= system.n_fixed() + 2)
    throw std::invalid_argument("need more than p + 2 observations to fit the model");
  if (system.n_clusters() < 2) throw std::invalid_argument("need at least two clusters");
  if (system.n_participants() <= system.n_clusters())
    throw std::invalid_argument("need a cluster with at least two participants");

  int evaluations = 0;
  std::vector<Candidate> candidates;

  auto search = [&](Subspace space, const Eigen::VectorXd& start) {
    auto f = [&](const Eigen::VectorXd& z) { return criterion_at(system, space, z); };
    const auto nm = nelder_mead(f, start, options.initial_step, options.tolerance,
                                options.max_evaluations);
    evaluations += nm.evaluations;
    candidates.push_back({space, nm.x, nm.value, nm.converged});
  };

  for (double sc : options.log_ratio_starts)
    for (double sd : options.log_ratio_starts) search({true, true}, Eigen::Vector2d(sc, sd));
  // Small or unbalanced panels can have a second basin far from the fixed
  // starts; a coarse lattice supplies one more start in the best cell.
  if (!options.lattice.empty()) {
    const Subspace both{true, true};
    Eigen::Vector2d best_point;
    double best_value = std::numeric_limits<double>::infinity();
    for (double lc : options.lattice)
      for (double ld : options.lattice) {
        const Eigen::Vector2d z(lc, ld);
        const double v = criterion_at(system, both, z);
        ++evaluations;
        if (v < best_value) {
          best_value = v;
          best_point = z;
        }
      }
    search(both, best_point);
  }
  for (double s : options.log_ratio_starts) {
    search({false, true}, Eigen::VectorXd::Constant(1, s));
    search({true, false}, Eigen::VectorXd::Constant(1, s));
  }
  {
    Subspace none{false, false};
    const Eigen::VectorXd empty(0);
    candidates.push_back({none, empty, criterion_at(system, none, empty), true});
    ++evaluations;
  }

  auto by_value = [](const Candidate& a, const Candidate& b) { return a.value < b.value; };
  // The simplex stops at a value spread of `tolerance`, too coarse to rank
  // an interior point against the boundary, so contenders are refined first.
  if (options.polish) {
    const double cutoff =
        std::min_element(candidates.begin(), candidates.end(), by_value)->value + 1e-3;
    for (auto& c : candidates)
      if (c.space.dim() > 0 && c.value <= cutoff) polish(system, c, evaluations);
  }

  // Best value wins; near-ties go to the candidate with fewer free ratios.
  const auto best = std::min_element(candidates.begin(), candidates.end(), by_value);
  Candidate chosen = *best;
  for (const auto& c : candidates)
    if (c.space.dim() < chosen.space.dim() && c.value <= best->value + 1e-9) chosen = c;

  LmmFit fit;
  fit.gradient_norm = 0.0;
  if (chosen.space.dim() > 0)
    fit.gradient_norm = fd_gradient(system, chosen.space, chosen.z, 1e-5, evaluations).norm();
  fit.converged = chosen.converged || fit.gradient_norm <= options.gradient_tolerance;

  const auto [gc, gd] = chosen.space.ratios(chosen.z);
  const auto e = system.evaluate(gc, gd);
  const double dof = static_cast<double>(system.n_obs() - system.n_fixed());
  const double sigma2 = std::max(e.pwrss / dof, system.sigma2_floor());
  fit.beta = e.beta;
  fit.covariance =
      sigma2 * e.xtvx_llt.solve(Eigen::MatrixXd::Identity(system.n_fixed(), system.n_fixed()));
  fit.components = {gc * sigma2, gd * sigma2, sigma2};
  fit.gamma_cluster = gc;
  fit.gamma_participant = gd;
  fit.criterion = system.profiled_criterion(e);
  fit.evaluations = evaluations;
  fit.n_obs = system.n_obs();
  fit.n_fixed = system.n_fixed();
  fit.n_clusters = system.n_clusters();
  fit.n_participants = system.n_participants();
  fit.labels = system.labels();
  return fit;
}

LmmFit fit_reml(const ModelMatrices& matrices, const RemlOptions& options) {
  return fit_reml(MixedModelSystem(matrices), options);
}

}  // namespace swsim
