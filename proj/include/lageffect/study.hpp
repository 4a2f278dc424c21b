#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lageffect/efficient.hpp"
#include "lageffect/estimator.hpp"
#include "lageffect/simulate.hpp"

namespace lageffect {

// Replication machinery behind the study CLI and the acceptance suite.
// Every number in a study report comes from these library calls.

struct ReplicationCell {
  int n_panels = 0;
  int replications = 0;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double sd_estimate = 0.0;        // replication SD
  double se_of_mean = 0.0;         // sd / sqrt(R)
  double bias = 0.0;
  double rmse = 0.0;
  double mean_reported_se = 0.0;
  double coverage = 0.0;           // fraction of 95% CIs containing truth
  double rejection_rate = 0.0;     // fraction rejecting H0: contrast = 0 at .05
  double mean_clip_events = 0.0;
};

struct ConsistencyResult {
  double truth = 0.0;
  double truth_mc_se = 0.0;
  std::vector<ReplicationCell> cells;  // one per n in the grid
};

// Fits the estimator on `replications` simulated datasets per grid point and
// compares contrast'beta against the Monte Carlo oracle truth.
ConsistencyResult run_consistency_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                        const Eigen::VectorXd& contrast,
                                        const std::vector<int>& n_panels_grid,
                                        int replications, long long oracle_replicates,
                                        std::uint64_t seed, int threads,
                                        const EstimateOptions& options = {});

struct CoverageResult {
  ReplicationCell cell;
  std::vector<double> p_values;    // one per replication
  double ks_statistic = 0.0;       // against U(0,1)
};

// Coverage / SE-calibration / p-value study at a single panel count.
CoverageResult run_coverage_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                  const Eigen::VectorXd& contrast, double truth,
                                  int n_panels, int replications, std::uint64_t seed,
                                  int threads, const EstimateOptions& options = {});

struct DoubleRobustnessCell {
  std::string label;
  ReplicationCell cell;
  bool expected_consistent = false;
};

struct DoubleRobustnessResult {
  double truth = 0.0;
  double truth_mc_se = 0.0;
  std::vector<DoubleRobustnessCell> cells;  // both, outcome-only, propensity-only, neither
};

// Four-cell suite. Misspecification is by construction: the outcome-wrong
// cells drop `outcome_drop` terms from the baseline basis, the
// propensity-wrong cells drop `propensity_drop` terms from R_k entirely.
DoubleRobustnessResult run_double_robustness_suite(
    const ScenarioSpec& scenario, const FeatureSpec& correct_spec,
    const std::vector<Term>& outcome_drop, const std::vector<Term>& propensity_drop,
    const Eigen::VectorXd& contrast, int n_panels, int replications,
    long long oracle_replicates, std::uint64_t seed, int threads,
    const EstimateOptions& options = {});

struct EfficiencyResult {
  int replications = 0;
  double var_main = 0.0;
  double var_efficient = 0.0;
  double variance_ratio = 0.0;       // efficient / main
  double paired_z = 0.0;             // z statistic for E[squared error difference] > 0
  double mean_plugin_ratio = 0.0;    // mean of per-fit variance_ratio_vs_main
};

// Replicated comparison of the main estimator (S = R, weights 1) against the
// Theorem-4 efficient score on the same datasets. The contrast picks the
// beta coordinate under comparison.
EfficiencyResult run_efficiency_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                      const Eigen::VectorXd& contrast, int n_panels,
                                      int replications, std::uint64_t seed, int threads,
                                      const EfficientOptions& eff_options = {});

struct OverlapLimitResult {
  double beta_mean = 0.0;          // replicated estimate with the wrong (constant) f
  double beta_se = 0.0;            // replication SE of the mean
  double beta_limit = 0.0;         // q(1-q)-weighted solve of G beta = g
  double limit_mc_se = 0.0;        // MC error of the limit from the oracle table
  double z = 0.0;
  std::vector<double> zeta_by_cell;  // oracle lag effect per (k, s) cell, row-major k then s
};

// Theorem 3 overlap-weighted limit with a deliberately constant-only f under
// a heterogeneous true effect. `s_term` must be a binary feature; the limit
// is computed from a large naturally-simulated sample and per-(k, s) oracle
// calls.
OverlapLimitResult run_overlap_limit_check(const ScenarioSpec& scenario,
                                           const FeatureSpec& wrong_f_spec,
                                           const Term& s_term, int n_panels,
                                           int replications, int limit_panels,
                                           long long oracle_replicates, std::uint64_t seed,
                                           int threads, const EstimateOptions& options = {});

// Kolmogorov-Smirnov statistic of a sample against U(0,1).
double ks_uniform_statistic(std::vector<double> sample);

}  // namespace lageffect
