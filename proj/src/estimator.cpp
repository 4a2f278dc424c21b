#include "lageffect/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "lageffect/numeric.hpp"

namespace lageffect {

namespace {

constexpr double kNormal975 = 1.959964;
constexpr double kBreadConditionLimit = 1e12;

double clamp01(double p, double clip) { return std::min(std::max(p, clip), 1.0 - clip); }

// Raw (unclipped) propensities from the linear indices; clipping applies
// only where ratios are formed.
void propensities(const Theta& theta, const EstimationProblem& problem, Eigen::VectorXd& q,
                  Eigen::VectorXd& p) {
  q = problem.s_design * theta.xi;
  p = problem.r_design * theta.eta;
  for (int i = 0; i < q.size(); ++i) q[i] = inv_logit(q[i]);
  for (int i = 0; i < p.size(); ++i) p[i] = inv_logit(p[i]);
}

// Outcome-model design row under the problem's parameterization and kept
// columns. q is the raw propensity for this row.
Eigen::VectorXd outcome_row(const EstimationProblem& problem, int i, double q) {
  const int ng = static_cast<int>(problem.g_cols.cols());
  const int nf = static_cast<int>(problem.f_cols.cols());
  if (problem.parameterization == Parameterization::Augmented) {
    Eigen::VectorXd d(ng + static_cast<int>(problem.kept_qf.size()) + nf);
    d.head(ng) = problem.g_cols.row(i).transpose();
    int at = ng;
    for (int j : problem.kept_qf) d[at++] = q * problem.f_cols(i, j);
    for (int j = 0; j < nf; ++j) d[at++] = problem.a[i] * problem.f_cols(i, j);
    return d;
  }
  Eigen::VectorXd d(ng + nf);
  d.head(ng) = problem.g_cols.row(i).transpose();
  for (int j = 0; j < nf; ++j) d[ng + j] = (problem.a[i] - q) * problem.f_cols(i, j);
  return d;
}

// Total u block over all rows at the given theta; used for the finite
// difference cross blocks of the bread.
Eigen::VectorXd total_u(const Theta& theta, const EstimationProblem& problem) {
  Eigen::VectorXd q, p;
  propensities(theta, problem, q, p);
  const int dim = problem.dim_alpha() + problem.dim_beta();
  Eigen::VectorXd coef(dim);
  coef << theta.alpha, theta.beta;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < problem.n_rows(); ++i) {
    const double w = compute_weight(problem.a[i], clamp01(q[i], problem.clip),
                                    clamp01(p[i], problem.clip), problem.clip);
    const Eigen::VectorXd d = outcome_row(problem, i, q[i]);
    u += w * (problem.y[i] - d.dot(coef)) * d;
  }
  return u;
}

}  // namespace

double compute_weight(double a, double q, double p, double clip, bool* clipped) {
  const double qc = clamp01(q, clip);
  const double pc = clamp01(p, clip);
  if (clipped) *clipped = (qc != q) || (pc != p);
  return a * (qc / pc) + (1.0 - a) * ((1.0 - qc) / (1.0 - pc));
}

Eigen::VectorXd augment_baseline(const Eigen::VectorXd& g_base, double q,
                                 const Eigen::VectorXd& f) {
  Eigen::VectorXd out(g_base.size() + f.size());
  out << g_base, q * f;
  return out;
}

EstimationProblem make_problem(const RowSet& rows, const FeatureSpec& spec,
                               const EstimateOptions& options) {
  EstimationProblem problem;
  problem.clip = options.clip;
  problem.parameterization = options.parameterization;
  problem.n_panels = rows.n_panels;
  problem.spans = rows.panel_spans();

  const int n = static_cast<int>(rows.rows.size());
  const int ns = n > 0 ? static_cast<int>(rows.rows[0].s.size()) : 0;
  const int nr = n > 0 ? static_cast<int>(rows.rows[0].r.size()) : 0;
  const auto f_pos = spec.f_positions();
  const auto g_pos = spec.g_positions();

  problem.s_design.resize(n, 1 + ns);
  problem.r_design.resize(n, 1 + nr);
  problem.f_cols.resize(n, 1 + static_cast<int>(f_pos.size()));
  problem.g_cols.resize(n, 1 + static_cast<int>(g_pos.size()));
  problem.a.resize(n);
  problem.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const EstimationRow& row = rows.rows[i];
    problem.s_design(i, 0) = 1.0;
    problem.s_design.row(i).tail(ns) = row.s.transpose();
    problem.r_design(i, 0) = 1.0;
    problem.r_design.row(i).tail(nr) = row.r.transpose();
    problem.f_cols(i, 0) = 1.0;
    for (size_t j = 0; j < f_pos.size(); ++j) problem.f_cols(i, 1 + j) = row.s[f_pos[j]];
    problem.g_cols(i, 0) = 1.0;
    for (size_t j = 0; j < g_pos.size(); ++j) problem.g_cols(i, 1 + j) = row.r[g_pos[j]];
    problem.a[i] = row.a;
    problem.y[i] = row.y_future;
  }
  return problem;
}

Eigen::VectorXd StackedScore::concatenated() const {
  Eigen::VectorXd out(l.size() + m.size() + u.size());
  out << l, m, u;
  return out;
}

Eigen::VectorXd Theta::packed() const {
  Eigen::VectorXd out(xi.size() + eta.size() + alpha.size() + beta.size());
  out << xi, eta, alpha, beta;
  return out;
}

Theta Theta::unpack(const Eigen::VectorXd& packed, const EstimationProblem& problem) {
  Theta t;
  int at = 0;
  t.xi = packed.segment(at, problem.dim_xi());
  at += problem.dim_xi();
  t.eta = packed.segment(at, problem.dim_eta());
  at += problem.dim_eta();
  t.alpha = packed.segment(at, problem.dim_alpha());
  at += problem.dim_alpha();
  t.beta = packed.segment(at, problem.dim_beta());
  return t;
}

std::vector<StackedScore> stacked_score(const Theta& theta, const EstimationProblem& problem) {
  Eigen::VectorXd q, p;
  propensities(theta, problem, q, p);
  const int dim_ab = problem.dim_alpha() + problem.dim_beta();
  Eigen::VectorXd coef(dim_ab);
  coef << theta.alpha, theta.beta;

  std::vector<StackedScore> scores(problem.spans.size());
  for (size_t s = 0; s < problem.spans.size(); ++s) {
    auto [begin, end] = problem.spans[s];
    StackedScore sc;
    sc.u = Eigen::VectorXd::Zero(dim_ab);
    sc.l = Eigen::VectorXd::Zero(problem.dim_xi());
    sc.m = Eigen::VectorXd::Zero(problem.dim_eta());
    for (int i = begin; i < end; ++i) {
      const double w = compute_weight(problem.a[i], clamp01(q[i], problem.clip),
                                      clamp01(p[i], problem.clip), problem.clip);
      const Eigen::VectorXd d = outcome_row(problem, i, q[i]);
      sc.u += w * (problem.y[i] - d.dot(coef)) * d;
      sc.l += (problem.a[i] - q[i]) * problem.s_design.row(i).transpose();
      sc.m += (problem.a[i] - p[i]) * problem.r_design.row(i).transpose();
    }
    scores[s] = std::move(sc);
  }
  return scores;
}

Eigen::MatrixXd stacked_jacobian(const Theta& theta, const EstimationProblem& problem) {
  const int n = problem.n_panels;
  const int dim = problem.dim_theta();
  const int nxi = problem.dim_xi();
  const int neta = problem.dim_eta();
  const int nab = problem.dim_alpha() + problem.dim_beta();

  Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd q, p;
  propensities(theta, problem, q, p);
  Eigen::VectorXd coef(nab);
  coef << theta.alpha, theta.beta;

  Eigen::MatrixXd l_xi = Eigen::MatrixXd::Zero(nxi, nxi);
  Eigen::MatrixXd m_eta = Eigen::MatrixXd::Zero(neta, neta);
  Eigen::MatrixXd u_ab = Eigen::MatrixXd::Zero(nab, nab);
  for (int i = 0; i < problem.n_rows(); ++i) {
    const Eigen::VectorXd srow = problem.s_design.row(i).transpose();
    const Eigen::VectorXd rrow = problem.r_design.row(i).transpose();
    l_xi.noalias() -= q[i] * (1.0 - q[i]) * srow * srow.transpose();
    m_eta.noalias() -= p[i] * (1.0 - p[i]) * rrow * rrow.transpose();
    const double w = compute_weight(problem.a[i], clamp01(q[i], problem.clip),
                                    clamp01(p[i], problem.clip), problem.clip);
    const Eigen::VectorXd d = outcome_row(problem, i, q[i]);
    u_ab.noalias() -= w * d * d.transpose();
  }
  bread.block(0, 0, nxi, nxi) = l_xi;
  bread.block(nxi, nxi, neta, neta) = m_eta;
  bread.block(nxi + neta, nxi + neta, nab, nab) = u_ab;

  // Cross blocks du/dxi and du/deta by central differences; the derivative
  // of the weight ratio is easy to get wrong analytically.
  auto fd_block = [&](bool wrt_xi) {
    const int cols = wrt_xi ? nxi : neta;
    Eigen::MatrixXd block(nab, cols);
    for (int j = 0; j < cols; ++j) {
      Theta lo = theta;
      Theta hi = theta;
      double& lo_ref = wrt_xi ? lo.xi[j] : lo.eta[j];
      double& hi_ref = wrt_xi ? hi.xi[j] : hi.eta[j];
      const double h = 1e-6 * std::max(1.0, std::abs(wrt_xi ? theta.xi[j] : theta.eta[j]));
      lo_ref -= h;
      hi_ref += h;
      block.col(j) = (total_u(hi, problem) - total_u(lo, problem)) / (2.0 * h);
    }
    return block;
  };
  bread.block(nxi + neta, 0, nab, nxi) = fd_block(true);
  bread.block(nxi + neta, nxi, nab, neta) = fd_block(false);
  bread /= static_cast<double>(n);
  return bread;
}

Eigen::MatrixXd sandwich_covariance(const Theta& theta, const EstimationProblem& problem,
                                    double* bread_condition) {
  const int n = problem.n_panels;
  const int dim = problem.dim_theta();

  // Meat: average outer product of per-panel scores. Panels with no rows
  // contribute zero scores but still count in n.
  const auto scores = stacked_score(theta, problem);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& sc : scores) {
    const Eigen::VectorXd v = sc.concatenated();
    meat.noalias() += v * v.transpose();
  }
  meat /= static_cast<double>(n);

  const Eigen::MatrixXd bread = stacked_jacobian(theta, problem);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(bread, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (bread_condition) *bread_condition = cond;
  if (!(cond < kBreadConditionLimit)) {
    throw Error(errc::singular_bread,
                "bread matrix condition number " + std::to_string(cond));
  }
  const Eigen::MatrixXd bread_inv =
      svd.solve(Eigen::MatrixXd::Identity(dim, dim));
  return (bread_inv * meat * bread_inv.transpose()) / static_cast<double>(n);
}

ThetaEstimate estimate(const RowSet& rows, const FeatureSpec& spec,
                       const EstimateOptions& options) {
  EstimationProblem problem;
  return estimate(rows, spec, options, problem);
}

ThetaEstimate estimate(const RowSet& rows, const FeatureSpec& spec,
                       const EstimateOptions& options, EstimationProblem& problem_out) {
  if (rows.rows.empty()) throw Error(errc::no_rows, "no estimation rows");
  problem_out = make_problem(rows, spec, options);
  EstimationProblem& problem = problem_out;
  if (problem.spans.size() < 2) {
    throw Error(errc::no_rows, "need rows from at least 2 panels");
  }

  ThetaEstimate est;
  est.n_panels = problem.n_panels;

  const LogisticFit xi_fit = fit_logistic(problem.s_design, problem.a);
  const LogisticFit eta_fit = fit_logistic(problem.r_design, problem.a);
  est.xi = xi_fit.coefficients;
  est.eta = eta_fit.coefficients;
  est.xi_iterations = xi_fit.iterations;
  est.eta_iterations = eta_fit.iterations;

  const int n = problem.n_rows();
  Eigen::VectorXd q(n), p(n), w(n);
  for (int i = 0; i < n; ++i) {
    q[i] = inv_logit(problem.s_design.row(i).dot(est.xi));
    p[i] = inv_logit(problem.r_design.row(i).dot(est.eta));
    bool clipped = false;
    w[i] = compute_weight(problem.a[i], q[i], p[i], options.clip, &clipped);
    if (clipped) ++est.clip_events;
  }

  const int ng = static_cast<int>(problem.g_cols.cols());
  const int nf = static_cast<int>(problem.f_cols.cols());

  if (options.parameterization == Parameterization::Augmented) {
    // Keep only q*f columns that are linearly independent of the baseline;
    // with discrete or empty S the fitted q is already in the span of g and
    // appending it verbatim would make the solve singular. Dropping such a
    // column re-expresses the same mean model, so beta is unchanged.
    Eigen::MatrixXd basis(n, ng + nf);
    basis.leftCols(ng) = problem.g_cols;
    int kept_total = ng;
    {
      // modified Gram-Schmidt with a second pass
      Eigen::MatrixXd ortho(n, ng + nf);
      int nb = 0;
      auto try_add = [&](Eigen::VectorXd col, bool* independent) {
        const double norm0 = col.norm();
        for (int pass = 0; pass < 2; ++pass) {
          for (int j = 0; j < nb; ++j) col -= ortho.col(j).dot(col) * ortho.col(j);
        }
        if (col.norm() <= std::max(1e-8 * norm0, 1e-300)) {
          *independent = false;
          return;
        }
        ortho.col(nb++) = col / col.norm();
        *independent = true;
      };
      for (int j = 0; j < ng; ++j) {
        bool ok = false;
        try_add(problem.g_cols.col(j), &ok);
        if (!ok) {
          throw Error(errc::rank_deficient, "baseline design g is rank deficient", {j});
        }
      }
      for (int j = 0; j < nf; ++j) {
        bool ok = false;
        try_add(q.asDiagonal() * problem.f_cols.col(j), &ok);
        if (ok) {
          problem.kept_qf.push_back(j);
          basis.col(kept_total++) = q.asDiagonal() * problem.f_cols.col(j);
        } else {
          est.dropped_qf_columns.push_back(j);
        }
      }
    }
    Eigen::MatrixXd design(n, kept_total + nf);
    design.leftCols(kept_total) = basis.leftCols(kept_total);
    for (int j = 0; j < nf; ++j) {
      design.col(kept_total + j) = problem.a.asDiagonal() * problem.f_cols.col(j);
    }
    const WlsFit fit = fit_wls(design, problem.y, w);
    est.alpha = fit.coefficients.head(kept_total);
    est.beta = fit.coefficients.tail(nf);
  } else {
    Eigen::MatrixXd design(n, ng + nf);
    design.leftCols(ng) = problem.g_cols;
    for (int j = 0; j < nf; ++j) {
      design.col(ng + j) = (problem.a - q).asDiagonal() * problem.f_cols.col(j);
    }
    const WlsFit fit = fit_wls(design, problem.y, w);
    est.alpha = fit.coefficients.head(ng);
    est.beta = fit.coefficients.tail(nf);
  }

  const Theta theta = est.theta();
  est.covariance = sandwich_covariance(theta, problem, &est.bread_condition);

  double max_norm = 0.0;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(problem.dim_theta());
  for (const auto& sc : stacked_score(theta, problem)) total += sc.concatenated();
  max_norm = total.cwiseAbs().maxCoeff();
  est.score_max_norm = max_norm;
  return est;
}

Eigen::MatrixXd ThetaEstimate::beta_covariance() const {
  const int nb = static_cast<int>(beta.size());
  const int offset = static_cast<int>(xi.size() + eta.size() + alpha.size());
  return covariance.block(offset, offset, nb, nb);
}

WaldReport wald(const ThetaEstimate& est, const Eigen::VectorXd& contrast) {
  if (contrast.size() != est.beta.size()) {
    throw Error(errc::invalid_config, "contrast dimension mismatch");
  }
  WaldReport report;
  report.contrast = contrast;
  report.estimate = contrast.dot(est.beta);
  const double var = contrast.dot(est.beta_covariance() * contrast);
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw Error(errc::zero_variance, "contrast variance is not positive");
  }
  report.std_error = std::sqrt(var);
  report.ci_low = report.estimate - kNormal975 * report.std_error;
  report.ci_high = report.estimate + kNormal975 * report.std_error;
  report.p_value = two_sided_p(report.estimate / report.std_error);
  return report;
}

}  // namespace lageffect
