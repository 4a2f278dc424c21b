#pragma once

#include <Eigen/Core>

#include "lageffect/error.hpp"

namespace lageffect {

struct LogisticFit {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double max_abs_update = 0.0;
  double log_quasi_likelihood = 0.0;
};

struct WlsFit {
  Eigen::VectorXd coefficients;
  double residual_sum = 0.0;  // weighted sum of squared residuals
  int design_rank = 0;
};

// Root of the logistic score sum_i (a_i - logit^-1(x_i' xi)) x_i = 0 by
// iteratively reweighted least squares. Tolerance 1e-8 on max |delta coef|,
// at most 50 iterations. Throws separation when any |coefficient| passes 30
// during iteration, rank_deficient on a singular weighted design,
// not_converged past the iteration cap.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome);

double predict_logistic(const LogisticFit& fit, const Eigen::VectorXd& design_row);

// Solves sum_i w_i x_i (y_i - x_i' theta) = 0 through a rank-revealing QR of
// the weighted design. rank_deficient errors carry the offending column
// indices.
WlsFit fit_wls(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
               const Eigen::VectorXd& weights);

// Quasi-likelihood under the independence model criterion: -2*QL + 2p with
// the binomial quasi-likelihood evaluated at the fitted probabilities.
double qicu(const LogisticFit& fit, const Eigen::MatrixXd& design,
            const Eigen::VectorXd& outcome);

}  // namespace lageffect
