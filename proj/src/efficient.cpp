#include "lageffect/efficient.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "lageffect/numeric.hpp"

namespace lageffect {

EfficientFit fit_efficient(const RowSet& rows, const FeatureSpec& spec,
                           const EfficientOptions& options) {
  if (rows.rows.empty()) throw Error(errc::no_rows, "no estimation rows");
  if (spec.s_indices.size() != spec.expanded_r_terms().size()) {
    throw Error(errc::invalid_config, "efficient score requires S = R");
  }

  EstimateOptions main_options;
  main_options.clip = options.clip;
  main_options.threads = options.threads;
  EstimationProblem problem;
  const ThetaEstimate main_fit = estimate(rows, spec, main_options, problem);

  const int n = problem.n_rows();
  const int nf = problem.dim_beta();
  const int ng = static_cast<int>(problem.g_cols.cols());

  EfficientFit fit;
  fit.rho.resize(n);
  for (int i = 0; i < n; ++i) {
    fit.rho[i] = inv_logit(problem.r_design.row(i).dot(main_fit.eta));
  }

  // Control-arm baseline mean on g(R).
  Eigen::VectorXd control_weight(n);
  long long n_control = 0;
  for (int i = 0; i < n; ++i) {
    control_weight[i] = problem.a[i] == 0.0 ? 1.0 : 0.0;
    if (problem.a[i] == 0.0) ++n_control;
  }
  if (n_control < ng) {
    throw Error(errc::no_control_rows,
                "only " + std::to_string(n_control) + " control rows for " +
                    std::to_string(ng) + " baseline coefficients");
  }
  const WlsFit mu_fit = fit_wls(problem.g_cols, problem.y, control_weight);
  fit.mu_coefficients = mu_fit.coefficients;
  fit.mu = problem.g_cols * mu_fit.coefficients;

  fit.sigma = Eigen::VectorXd::Ones(n);
  if (options.sigma == SigmaMode::Fitted) {
    // Per-arm conditional variances as squared-residual regressions. The
    // treated-arm residuals use the main fit's effect estimate so the
    // variance regression does not absorb the lag effect.
    Eigen::VectorXd effect = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      effect[i] = problem.f_cols.row(i).dot(main_fit.beta);
    }
    Eigen::VectorXd sq_resid(n), treated_weight(n);
    for (int i = 0; i < n; ++i) {
      const double r = problem.y[i] - fit.mu[i] - problem.a[i] * effect[i];
      sq_resid[i] = r * r;
      treated_weight[i] = 1.0 - control_weight[i];
    }
    MeanVar overall;
    for (int i = 0; i < n; ++i) overall.add(problem.y[i]);
    fit.sigma_floor = 1e-6 * overall.variance();
    if (!(fit.sigma_floor > 0.0)) fit.sigma_floor = 1e-12;

    const WlsFit var1 = fit_wls(problem.g_cols, sq_resid, treated_weight);
    const WlsFit var0 = fit_wls(problem.g_cols, sq_resid, control_weight);
    fit.var1_coefficients = var1.coefficients;
    fit.var0_coefficients = var0.coefficients;
    for (int i = 0; i < n; ++i) {
      const double v1 = std::max(problem.g_cols.row(i).dot(var1.coefficients), fit.sigma_floor);
      const double v0 = std::max(problem.g_cols.row(i).dot(var0.coefficients), fit.sigma_floor);
      fit.sigma[i] = (1.0 - fit.rho[i]) * v1 + fit.rho[i] * v0;
    }
  }

  // Closed-form beta: sum (f/sigma)(A-rho) A f' beta = sum (f/sigma)(A-rho)(Y-mu).
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(nf, nf);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd f = problem.f_cols.row(i).transpose();
    const double scale = (problem.a[i] - fit.rho[i]) / fit.sigma[i];
    lhs.noalias() += scale * problem.a[i] * f * f.transpose();
    rhs.noalias() += scale * (problem.y[i] - fit.mu[i]) * f;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  qr.setThreshold(1e-12);
  if (qr.rank() < nf) {
    throw Error(errc::rank_deficient, "efficient-score system is singular");
  }
  fit.beta = qr.solve(rhs);

  Eigen::VectorXd total_score = Eigen::VectorXd::Zero(nf);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd f = problem.f_cols.row(i).transpose();
    const double resid = problem.y[i] - fit.mu[i] - problem.a[i] * f.dot(fit.beta);
    total_score += (f / fit.sigma[i]) * (problem.a[i] - fit.rho[i]) * resid;
  }
  fit.score_max_norm = total_score.cwiseAbs().maxCoeff();

  // Plug-in sandwich for the beta equation with nuisances held fixed:
  // bread = lhs / n_panels, meat from per-panel score outer products.
  {
    const double n_panels = static_cast<double>(problem.n_panels);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(nf, nf);
    for (auto [begin, end] : problem.spans) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(nf);
      for (int i = begin; i < end; ++i) {
        const Eigen::VectorXd f = problem.f_cols.row(i).transpose();
        const double resid = problem.y[i] - fit.mu[i] - problem.a[i] * f.dot(fit.beta);
        s += (f / fit.sigma[i]) * (problem.a[i] - fit.rho[i]) * resid;
      }
      meat.noalias() += s * s.transpose();
    }
    meat /= n_panels;
    const Eigen::MatrixXd bread = lhs / n_panels;
    const Eigen::MatrixXd bread_inv =
        bread.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(nf, nf));
    fit.beta_covariance = (bread_inv * meat * bread_inv.transpose()) / n_panels;
    const double tr_eff = fit.beta_covariance.trace();
    const double tr_main = main_fit.beta_covariance().trace();
    fit.variance_ratio_vs_main = tr_main > 0.0 ? tr_eff / tr_main : 1.0;
  }
  return fit;
}

}  // namespace lageffect
