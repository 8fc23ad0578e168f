#include "swsim/inference.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>
#include <utility>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "swsim/tdist.hpp"

namespace swsim {

namespace {

constexpr double kGradientStep = 1e-4;
constexpr double kHessianStep = 1e-3;
constexpr double kAbsoluteStep = 1e-6;

using Psi = std::array<double, 3>;  // cluster, participant, residual

VarianceComponents to_components(const Psi& psi) { return {psi[0], psi[1], psi[2]}; }

}  // namespace

SatterthwaiteResult satterthwaite_df(const MixedModelSystem& system, const LmmFit& fit,
                                     Eigen::Index coefficient) {
  if (coefficient < 0 || coefficient >= fit.n_fixed)
    throw std::out_of_range("coefficient index out of range");
  const double residual_dof = static_cast<double>(fit.n_obs - fit.n_fixed);
  const Psi psi{fit.components.cluster, fit.components.participant, fit.components.residual};
  if (!(psi[2] > 0.0)) return {residual_dof, true};
  const double floor_step = kAbsoluteStep * psi[2];

  // Components too close to zero for a central difference stay fixed.
  std::vector<int> free;
  for (int m = 0; m < 3; ++m)
    if (m == 2 || psi[m] > 2.0 * floor_step) free.push_back(m);
  const auto n = static_cast<Eigen::Index>(free.size());

  auto step = [&](int m, double rel) { return std::max(rel * psi[m], floor_step); };
  auto shifted = [&](std::initializer_list<std::pair<int, double>> moves) {
    Psi x = psi;
    for (auto [m, h] : moves) x[m] += h;
    return x;
  };
  auto variance = [&](const Psi& x) {
    return gls_fixed_effects(system, to_components(x)).covariance(coefficient, coefficient);
  };
  auto deviance = [&](const Psi& x) { return reml_deviance(system, to_components(x)); };

  const double g = variance(psi);
  Eigen::VectorXd grad(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int m = free[a];
    const double h = step(m, kGradientStep);
    grad[a] = (variance(shifted({{m, h}})) - variance(shifted({{m, -h}}))) / (2.0 * h);
  }

  const double d0 = deviance(psi);
  Eigen::MatrixXd hessian(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int ma = free[a];
    const double ha = step(ma, kHessianStep);
    hessian(a, a) =
        (deviance(shifted({{ma, ha}})) - 2.0 * d0 + deviance(shifted({{ma, -ha}}))) / (ha * ha);
    for (Eigen::Index b = 0; b < a; ++b) {
      const int mb = free[b];
      const double hb = step(mb, kHessianStep);
      hessian(a, b) = hessian(b, a) =
          (deviance(shifted({{ma, ha}, {mb, hb}})) - deviance(shifted({{ma, ha}, {mb, -hb}})) -
           deviance(shifted({{ma, -ha}, {mb, hb}})) + deviance(shifted({{ma, -ha}, {mb, -hb}}))) /
          (4.0 * ha * hb);
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  if (llt.info() != Eigen::Success) return {residual_dof, true};
  const Eigen::MatrixXd covariance = 2.0 * llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double spread = grad.dot(covariance * grad);
  const double df = 2.0 * g * g / spread;
  if (!std::isfinite(df) || !(df > 0.0)) return {residual_dof, true};
  return {df, false};
}

SatterthwaiteResult satterthwaite_df(const ModelMatrices& matrices, const LmmFit& fit,
                                     Eigen::Index coefficient) {
  return satterthwaite_df(MixedModelSystem(matrices), fit, coefficient);
}

CoefficientTest wald_t_test(const LmmFit& fit, double df, Eigen::Index coefficient, double alpha) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  CoefficientTest test;
  test.estimate = fit.beta[coefficient];
  test.standard_error = fit.standard_error(coefficient);
  test.df = df;
  test.t = test.estimate / test.standard_error;
  test.p_value = test.estimate == 0.0 ? 1.0 : student_t_two_sided_p(test.t, df);
  test.significant = test.p_value < alpha;
  return test;
}

}  // namespace swsim
