#pragma once

#include "swsim/lmm.hpp"

namespace swsim {

struct SatterthwaiteResult {
  double df = 0.0;
  bool fallback = false;  // Hessian not positive definite, df set to N - p
};

/// Satterthwaite degrees of freedom for one fixed-effect coefficient:
/// df = 2 g^2 / (grad g' A grad g), g the coefficient's GLS variance as a
/// function of (sigma_c^2, sigma_d^2, sigma_e^2) and A = 2 H^-1 with H the
/// Hessian of the -2 REML deviance. Zero components are held fixed.
SatterthwaiteResult satterthwaite_df(const MixedModelSystem& system, const LmmFit& fit,
                                     Eigen::Index coefficient);
SatterthwaiteResult satterthwaite_df(const ModelMatrices& matrices, const LmmFit& fit,
                                     Eigen::Index coefficient);

struct CoefficientTest {
  double estimate = 0.0;
  double standard_error = 0.0;
  double df = 0.0;
  double t = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool df_fallback = false;
};

/// Two-sided t test of a single coefficient at level alpha.
CoefficientTest wald_t_test(const LmmFit& fit, double df, Eigen::Index coefficient,
                            double alpha = 0.05);

}  // namespace swsim
