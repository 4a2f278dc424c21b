#pragma once

#include <Eigen/Core>

#include "lageffect/estimator.hpp"

namespace lageffect {

enum class SigmaMode {
  Fitted,  // per-arm squared-residual regressions, floored
  Unit,    // sigma_k = 1; the score then matches the main estimating equation
};

struct EfficientOptions {
  SigmaMode sigma = SigmaMode::Fitted;
  double clip = 1e-3;
  int threads = 1;
};

struct EfficientFit {
  Eigen::VectorXd beta;
  double variance_ratio_vs_main = 1.0;  // trace of estimated beta covariances, efficient / main
  Eigen::VectorXd rho;                  // fitted propensity per row
  Eigen::VectorXd mu;                   // fitted control-arm mean per row
  Eigen::VectorXd sigma;                // mixture variance weight per row
  Eigen::VectorXd mu_coefficients;
  Eigen::VectorXd var1_coefficients;
  Eigen::VectorXd var0_coefficients;
  double sigma_floor = 0.0;
  double score_max_norm = 0.0;
  Eigen::MatrixXd beta_covariance;      // plug-in sandwich treating nuisances as fixed
};

// Efficient-score estimator for the S = R special case: rho from the R-design
// logistic fit, mu from a control-arm regression on g(R), per-arm conditional
// variances from squared-residual regressions (floored at 1e-6 times the
// overall outcome variance), then the closed-form beta solve of
//   sum (f/sigma)(A - rho)(Y - mu - A f'beta) = 0.
EfficientFit fit_efficient(const RowSet& rows, const FeatureSpec& spec,
                           const EfficientOptions& options = {});

}  // namespace lageffect
