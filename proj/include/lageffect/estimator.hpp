#pragma once

#include <Eigen/Core>
#include <vector>

#include "lageffect/feature.hpp"
#include "lageffect/glm.hpp"

namespace lageffect {

enum class Parameterization {
  Augmented,  // baseline [g, q*f], effect column A*f
  Centered,   // baseline g, effect column (A-q)*f
};

struct EstimateOptions {
  double clip = 1e-3;  // probability clipping for the weight ratio
  Parameterization parameterization = Parameterization::Augmented;
  int threads = 1;
};

// Stabilized weight, Wk = a q/p + (1-a)(1-q)/(1-p), with q and p clamped
// into [clip, 1-clip] first. `clipped` reports whether either clamp fired.
double compute_weight(double a, double q, double p, double clip, bool* clipped = nullptr);

// [g_base, q*f]: makes the working mean model contain the centered model up
// to a re-definition of the baseline coefficients.
Eigen::VectorXd augment_baseline(const Eigen::VectorXd& g_base, double q,
                                 const Eigen::VectorXd& f);

// Per-row design material shared by the estimator, the stacked score, and
// the sandwich. Built once from a RowSet; immutable afterwards.
struct EstimationProblem {
  Eigen::MatrixXd s_design;  // [1, s]
  Eigen::MatrixXd r_design;  // [1, r]
  Eigen::MatrixXd f_cols;    // [1, s at f positions]
  Eigen::MatrixXd g_cols;    // [1, r at g positions]
  Eigen::VectorXd a;
  Eigen::VectorXd y;
  std::vector<std::pair<int, int>> spans;  // row ranges per contributing panel
  int n_panels = 0;                        // all panels, including zero-row ones
  double clip = 1e-3;
  Parameterization parameterization = Parameterization::Augmented;
  std::vector<int> kept_qf;  // q*f columns kept in the augmented baseline

  int n_rows() const { return static_cast<int>(a.size()); }
  int dim_xi() const { return static_cast<int>(s_design.cols()); }
  int dim_eta() const { return static_cast<int>(r_design.cols()); }
  int dim_beta() const { return static_cast<int>(f_cols.cols()); }
  int dim_alpha() const {
    return static_cast<int>(g_cols.cols()) +
           (parameterization == Parameterization::Augmented
                ? static_cast<int>(kept_qf.size())
                : 0);
  }
  int dim_theta() const { return dim_xi() + dim_eta() + dim_alpha() + dim_beta(); }
};

EstimationProblem make_problem(const RowSet& rows, const FeatureSpec& spec,
                               const EstimateOptions& options);

// Per-panel stacked estimating-function value: u is the weighted outcome
// block over (alpha, beta), l and m are the logistic score blocks for xi
// and eta. Concatenation follows the theta order (xi, eta, alpha, beta).
struct StackedScore {
  Eigen::VectorXd u;
  Eigen::VectorXd l;
  Eigen::VectorXd m;

  Eigen::VectorXd concatenated() const;  // (l, m, u)
};

struct Theta {
  Eigen::VectorXd xi;
  Eigen::VectorXd eta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  Eigen::VectorXd packed() const;  // (xi, eta, alpha, beta)
  static Theta unpack(const Eigen::VectorXd& packed, const EstimationProblem& problem);
};

std::vector<StackedScore> stacked_score(const Theta& theta, const EstimationProblem& problem);

// Bn = (1/n) sum of per-panel score Jacobians in the (l, m, u) x
// (xi, eta, alpha, beta) block layout. The logistic and outcome self-blocks
// are analytic; the cross blocks of the outcome score with respect to
// (xi, eta) use central finite differences with step 1e-6 * max(1, |theta_j|).
Eigen::MatrixXd stacked_jacobian(const Theta& theta, const EstimationProblem& problem);

// Empirical sandwich (1/n) Bn^-1 Cn Bn^-T at the fitted root.
Eigen::MatrixXd sandwich_covariance(const Theta& theta, const EstimationProblem& problem,
                                    double* bread_condition = nullptr);

struct ThetaEstimate {
  Eigen::VectorXd xi;
  Eigen::VectorXd eta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // over (xi, eta, alpha, beta)
  int n_panels = 0;
  long long clip_events = 0;

  // diagnostics
  int xi_iterations = 0;
  int eta_iterations = 0;
  double bread_condition = 0.0;
  double score_max_norm = 0.0;
  std::vector<int> dropped_qf_columns;

  Theta theta() const { return Theta{xi, eta, alpha, beta}; }
  Eigen::MatrixXd beta_covariance() const;
};

// Two-stage fit: logistic xi on the S design, logistic eta on the R design,
// stabilized weights, then the weighted outcome solve, which is the exact
// root of the primary estimating equation because it is linear in
// (alpha, beta). Redundant q*f baseline columns (possible with discrete or
// empty S) are detected and dropped; beta is unaffected by the choice of
// baseline basis.
ThetaEstimate estimate(const RowSet& rows, const FeatureSpec& spec,
                       const EstimateOptions& options = {});

// Variant that also hands back the design material for score/sandwich reuse.
ThetaEstimate estimate(const RowSet& rows, const FeatureSpec& spec,
                       const EstimateOptions& options, EstimationProblem& problem_out);

struct WaldReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  Eigen::VectorXd contrast;
};

// contrast' beta with the normal 95% interval (quantile 1.959964).
WaldReport wald(const ThetaEstimate& estimate, const Eigen::VectorXd& contrast);

}  // namespace lageffect
