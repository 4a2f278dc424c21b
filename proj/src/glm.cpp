#include "lageffect/glm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "lageffect/numeric.hpp"

namespace lageffect {

namespace {

constexpr double kIrlsTolerance = 1e-8;
constexpr int kIrlsMaxIterations = 50;
constexpr double kSeparationBound = 30.0;

double binomial_ql(const Eigen::VectorXd& outcome, const Eigen::VectorXd& mu) {
  KahanSum ql;
  for (int i = 0; i < outcome.size(); ++i) {
    ql.add(outcome[i] * std::log(mu[i]) + (1.0 - outcome[i]) * std::log(1.0 - mu[i]));
  }
  return ql.value();
}

std::vector<int> dependent_columns(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                                   int p) {
  std::vector<int> bad;
  const auto& perm = qr.colsPermutation().indices();
  for (int j = qr.rank(); j < p; ++j) bad.push_back(perm[j]);
  return bad;
}

}  // namespace

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  if (n < p) throw Error(errc::rank_deficient, "fewer rows than coefficients");
  if (!design.allFinite()) throw Error(errc::non_finite_value, "design not finite");

  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd eta(n), mu(n), z(n), w(n);
  for (int iter = 1; iter <= kIrlsMaxIterations; ++iter) {
    eta = design * fit.coefficients;
    for (int i = 0; i < n; ++i) {
      mu[i] = inv_logit(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
    }
    // Weighted least squares step on the working response.
    Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd wx = sw.asDiagonal() * design;
    Eigen::VectorXd wz = sw.asDiagonal() * (eta + (outcome - mu).cwiseQuotient(w));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      throw Error(errc::rank_deficient, "logistic design is rank deficient",
                  dependent_columns(qr, p));
    }
    Eigen::VectorXd next = qr.solve(wz);
    fit.max_abs_update = (next - fit.coefficients).cwiseAbs().maxCoeff();
    fit.coefficients = next;
    fit.iterations = iter;
    if (fit.coefficients.cwiseAbs().maxCoeff() > kSeparationBound) {
      throw Error(errc::separation, "coefficient magnitude exceeded 30 during IRLS");
    }
    if (fit.max_abs_update <= kIrlsTolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw Error(errc::not_converged,
                "IRLS did not converge in " + std::to_string(kIrlsMaxIterations) +
                    " iterations (last update " + std::to_string(fit.max_abs_update) + ")");
  }
  eta = design * fit.coefficients;
  for (int i = 0; i < n; ++i) mu[i] = inv_logit(eta[i]);
  fit.log_quasi_likelihood = binomial_ql(outcome, mu);
  return fit;
}

double predict_logistic(const LogisticFit& fit, const Eigen::VectorXd& design_row) {
  return inv_logit(fit.coefficients.dot(design_row));
}

WlsFit fit_wls(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
               const Eigen::VectorXd& weights) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  if (n < p) throw Error(errc::rank_deficient, "fewer rows than coefficients");
  Eigen::VectorXd sw = weights.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd wx = sw.asDiagonal() * design;
  Eigen::VectorXd wy = sw.asDiagonal() * outcome;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
  qr.setThreshold(1e-10);
  WlsFit fit;
  fit.design_rank = static_cast<int>(qr.rank());
  if (fit.design_rank < p) {
    throw Error(errc::rank_deficient, "WLS design is rank deficient",
                dependent_columns(qr, p));
  }
  fit.coefficients = qr.solve(wy);
  fit.residual_sum = (wy - wx * fit.coefficients).squaredNorm();
  return fit;
}

double qicu(const LogisticFit& fit, const Eigen::MatrixXd& design,
            const Eigen::VectorXd& outcome) {
  Eigen::VectorXd eta = design * fit.coefficients;
  Eigen::VectorXd mu(eta.size());
  for (int i = 0; i < eta.size(); ++i) mu[i] = inv_logit(eta[i]);
  return -2.0 * binomial_ql(outcome, mu) + 2.0 * static_cast<double>(design.cols());
}

}  // namespace lageffect
