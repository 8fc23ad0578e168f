#pragma once

// Shared fixtures for the unit and acceptance tests: random small panels and
// dense whole-matrix reference implementations of the REML algebra.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "swsim/lmm.hpp"
#include "swsim/modelspec.hpp"

namespace swsim::testing {

inline Eigen::MatrixXd incidence(const std::vector<int>& groups, int n_groups) {
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), n_groups);
  for (std::size_t r = 0; r < groups.size(); ++r) Z(static_cast<Eigen::Index>(r), groups[r]) = 1.0;
  return Z;
}

/// Relative covariance I + gc Zc Zc' + gd Zd Zd'.
inline Eigen::MatrixXd dense_v(const ModelMatrices& m, double gc, double gd) {
  const Eigen::MatrixXd Zc = incidence(m.cluster, m.n_clusters);
  const Eigen::MatrixXd Zd = incidence(m.participant, m.n_participants);
  return Eigen::MatrixXd::Identity(m.rows(), m.rows()) + gc * Zc * Zc.transpose() +
         gd * Zd * Zd.transpose();
}

struct DenseReml {
  double criterion = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // sigma2 * (X' V*^-1 X)^-1
};

/// Profiled REML criterion evaluated with N x N matrices.
inline DenseReml dense_reml(const ModelMatrices& m, double gc, double gd) {
  const Eigen::MatrixXd V = dense_v(m, gc, gd);
  const Eigen::LLT<Eigen::MatrixXd> vllt(V);
  const Eigen::MatrixXd vinv_x = vllt.solve(m.X);
  const Eigen::MatrixXd xtvx = m.X.transpose() * vinv_x;
  const Eigen::LLT<Eigen::MatrixXd> xllt(xtvx);
  DenseReml d;
  d.beta = xllt.solve(vinv_x.transpose() * m.y);
  const Eigen::VectorXd r = m.y - m.X * d.beta;
  const double pwrss = r.dot(vllt.solve(r));
  const double dof = static_cast<double>(m.rows() - m.cols());
  const double logdet_v = 2.0 * vllt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_x = 2.0 * xllt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  d.sigma2 = pwrss / dof;
  d.criterion = logdet_v + logdet_x + dof * (1.0 + std::log(2.0 * std::numbers::pi * d.sigma2));
  d.covariance = d.sigma2 * xtvx.inverse();
  return d;
}

/// GLS at absolute variances with the full covariance matrix.
inline GlsResult dense_gls(const ModelMatrices& m, const VarianceComponents& vc) {
  const Eigen::MatrixXd Zc = incidence(m.cluster, m.n_clusters);
  const Eigen::MatrixXd Zd = incidence(m.participant, m.n_participants);
  const Eigen::MatrixXd V = vc.residual * Eigen::MatrixXd::Identity(m.rows(), m.rows()) +
                            vc.cluster * Zc * Zc.transpose() +
                            vc.participant * Zd * Zd.transpose();
  const Eigen::LLT<Eigen::MatrixXd> vllt(V);
  const Eigen::MatrixXd vinv_x = vllt.solve(m.X);
  GlsResult g;
  g.covariance = (m.X.transpose() * vinv_x).inverse();
  g.beta = g.covariance * (vinv_x.transpose() * m.y);
  return g;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Random unbalanced nested panel with N <= 60: 2-5 clusters, 2-4
/// participants each, 1-4 observations per participant. X holds an
/// intercept, a binary exposure and a continuous covariate. Panels too small
/// to fit (N < 8) are redrawn.
inline ModelMatrices random_small_panel(std::mt19937_64& rng) {
  while (true) {
    std::uniform_int_distribution<int> n_clusters_d(2, 5), n_part_d(2, 4), n_obs_d(1, 4);
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    const int n_clusters = n_clusters_d(rng);
    std::vector<int> cluster, participant;
    std::vector<double> y, x1, x2;
    int next_participant = 0;
    for (int i = 0; i < n_clusters; ++i) {
      const double c = 2.0 * z(rng);
      const int n_part = n_part_d(rng);
      for (int k = 0; k < n_part; ++k) {
        const double d = 1.5 * z(rng);
        const int n_obs = n_obs_d(rng);
        for (int o = 0; o < n_obs; ++o) {
          const double e = coin(rng) ? 1.0 : 0.0;
          const double cov = 10.0 * z(rng) + 50.0;
          cluster.push_back(i);
          participant.push_back(next_participant);
          x1.push_back(e);
          x2.push_back(cov);
          y.push_back(3.0 + 0.7 * e - 0.05 * cov + c + d + z(rng));
        }
        ++next_participant;
      }
    }
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n < 8) continue;
    Eigen::MatrixXd X(n, 3);
    X.col(0).setOnes();
    X.col(1) = Eigen::Map<Eigen::VectorXd>(x1.data(), n);
    X.col(2) = Eigen::Map<Eigen::VectorXd>(x2.data(), n);
    // Guarantee both exposure levels occur.
    X(0, 1) = 0.0;
    X(n - 1, 1) = 1.0;
    return make_matrices(Eigen::Map<Eigen::VectorXd>(y.data(), n), X, cluster, participant,
                         {"(Intercept)", "exposed", "x"});
  }
}

/// Point i of the 2-D Halton sequence (bases 2 and 3) in the unit square.
inline std::pair<double, double> halton2(int i) {
  auto radical = [](int n, int base) {
    double f = 1.0, r = 0.0;
    while (n > 0) {
      f /= base;
      r += f * (n % base);
      n /= base;
    }
    return r;
  };
  return {radical(i, 2), radical(i, 3)};
}


/// Balanced a x b x n nested layout, intercept-only X.
inline ModelMatrices balanced_nested(int a, int b, int n, double sc, double sd, double se,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<int> cluster, participant;
  std::vector<double> y;
  for (int i = 0; i < a; ++i) {
    const double c = sc * z(rng);
    for (int k = 0; k < b; ++k) {
      const double d = sd * z(rng);
      for (int o = 0; o < n; ++o) {
        cluster.push_back(i);
        participant.push_back(i * b + k);
        y.push_back(5.0 + c + d + se * z(rng));
      }
    }
  }
  const auto N = static_cast<Eigen::Index>(y.size());
  return make_matrices(Eigen::Map<Eigen::VectorXd>(y.data(), N), Eigen::MatrixXd::Ones(N, 1),
                       cluster, participant, {"(Intercept)"});
}

/// Residuals orthogonal to X and every participant indicator: REML optimum at zero ratios.
inline ModelMatrices ols_limit(ModelMatrices m, std::uint64_t seed) {
  Eigen::MatrixXd basis(m.rows(), m.cols() + m.n_participants);
  basis << m.X, incidence(m.participant, m.n_participants);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 4.0);
  Eigen::VectorXd e(m.rows());
  for (auto& v : e) v = z(rng);
  e -= basis * basis.colPivHouseholderQr().solve(e);
  m.y = m.X * Eigen::VectorXd::Ones(m.cols()) + e;
  return m;
}

}  // namespace swsim::testing
