#include "lageffect/study.hpp"

#include <algorithm>
#include <cmath>

#include "lageffect/glm.hpp"
#include "lageffect/numeric.hpp"

namespace lageffect {

namespace {

constexpr std::uint64_t kDatasetStream = 101;

struct RepOutcome {
  double estimate = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  double clip_events = 0.0;
  bool ok = false;
};

// One simulated dataset -> one fitted contrast.
RepOutcome one_replication(const ScenarioSpec& scenario, const FeatureSpec& spec,
                           const Eigen::VectorXd& contrast, int n_panels,
                           std::uint64_t dataset_seed, const EstimateOptions& options) {
  RepOutcome out;
  const PanelSet panels = simulate_panels(scenario, n_panels, dataset_seed);
  const RowSet rows = build_rows(panels, spec);
  const ThetaEstimate est = estimate(rows, spec, options);
  const WaldReport report = wald(est, contrast);
  out.estimate = report.estimate;
  out.std_error = report.std_error;
  out.p_value = report.p_value;
  out.clip_events = static_cast<double>(est.clip_events);
  out.ok = true;
  return out;
}

ReplicationCell summarize(const std::vector<RepOutcome>& reps, double truth, int n_panels) {
  ReplicationCell cell;
  cell.n_panels = n_panels;
  cell.truth = truth;
  MeanVar est, se, clip;
  KahanSum sq_err;
  long long covered = 0, rejected = 0, used = 0;
  for (const auto& r : reps) {
    if (!r.ok) continue;
    ++used;
    est.add(r.estimate);
    se.add(r.std_error);
    clip.add(r.clip_events);
    sq_err.add((r.estimate - truth) * (r.estimate - truth));
    const double lo = r.estimate - 1.959964 * r.std_error;
    const double hi = r.estimate + 1.959964 * r.std_error;
    if (lo <= truth && truth <= hi) ++covered;
    if (r.p_value < 0.05) ++rejected;
  }
  cell.replications = static_cast<int>(used);
  cell.mean_estimate = est.mean;
  cell.sd_estimate = est.sd();
  cell.se_of_mean = est.se_of_mean();
  cell.bias = est.mean - truth;
  cell.rmse = used > 0 ? std::sqrt(sq_err.value() / static_cast<double>(used)) : 0.0;
  cell.mean_reported_se = se.mean;
  cell.coverage = used > 0 ? static_cast<double>(covered) / static_cast<double>(used) : 0.0;
  cell.rejection_rate = used > 0 ? static_cast<double>(rejected) / static_cast<double>(used) : 0.0;
  cell.mean_clip_events = clip.mean;
  return cell;
}

std::vector<RepOutcome> replicate(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                  const Eigen::VectorXd& contrast, int n_panels,
                                  int replications, std::uint64_t seed, int threads,
                                  const EstimateOptions& options) {
  std::vector<RepOutcome> reps(replications);
  parallel_for(replications, threads, [&](long long r) {
    const std::uint64_t dataset_seed = rng::counter_hash(seed, kDatasetStream, r, n_panels);
    reps[static_cast<size_t>(r)] =
        one_replication(scenario, spec, contrast, n_panels, dataset_seed, options);
  });
  return reps;
}

}  // namespace

ConsistencyResult run_consistency_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                        const Eigen::VectorXd& contrast,
                                        const std::vector<int>& n_panels_grid,
                                        int replications, long long oracle_replicates,
                                        std::uint64_t seed, int threads,
                                        const EstimateOptions& options) {
  ConsistencyResult result;
  const OracleEstimate oracle =
      oracle_lag_effect(scenario, 1, spec.lag, {}, oracle_replicates, seed ^ 0xF00DULL, threads);
  result.truth = oracle.value;
  result.truth_mc_se = oracle.mc_se;
  for (int n : n_panels_grid) {
    const auto reps = replicate(scenario, spec, contrast, n, replications, seed, threads, options);
    result.cells.push_back(summarize(reps, result.truth, n));
  }
  return result;
}

CoverageResult run_coverage_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                  const Eigen::VectorXd& contrast, double truth,
                                  int n_panels, int replications, std::uint64_t seed,
                                  int threads, const EstimateOptions& options) {
  CoverageResult result;
  const auto reps =
      replicate(scenario, spec, contrast, n_panels, replications, seed, threads, options);
  result.cell = summarize(reps, truth, n_panels);
  for (const auto& r : reps) {
    if (r.ok) result.p_values.push_back(r.p_value);
  }
  result.ks_statistic = ks_uniform_statistic(result.p_values);
  return result;
}

DoubleRobustnessResult run_double_robustness_suite(
    const ScenarioSpec& scenario, const FeatureSpec& correct_spec,
    const std::vector<Term>& outcome_drop, const std::vector<Term>& propensity_drop,
    const Eigen::VectorXd& contrast, int n_panels, int replications,
    long long oracle_replicates, std::uint64_t seed, int threads,
    const EstimateOptions& options) {
  DoubleRobustnessResult result;
  const OracleEstimate oracle = oracle_lag_effect(scenario, 1, correct_spec.lag, {},
                                                  oracle_replicates, seed ^ 0xD00DULL, threads);
  result.truth = oracle.value;
  result.truth_mc_se = oracle.mc_se;

  const auto expanded = correct_spec.expanded_r_terms();
  auto position_of = [&](const Term& term) {
    for (size_t i = 0; i < expanded.size(); ++i) {
      if (expanded[i] == term) return static_cast<int>(i);
    }
    throw Error(errc::invalid_config, "drop term '" + term.to_string() + "' not in r_terms");
  };

  // Outcome misspecification keeps R_k intact but removes terms from the
  // baseline basis g. Propensity misspecification removes the term from R_k
  // itself (it stays a measurable function of the remaining R_k columns, so
  // identification is intact while the logistic model is wrong).
  auto wrong_outcome = [&](FeatureSpec spec) {
    std::vector<int> dropped;
    for (const auto& t : outcome_drop) dropped.push_back(position_of(t));
    spec.g_identity = false;
    spec.g_base.clear();
    for (int i = 0; i < static_cast<int>(expanded.size()); ++i) {
      if (std::find(dropped.begin(), dropped.end(), i) == dropped.end()) {
        spec.g_base.push_back(i);
      }
    }
    return spec;
  };
  auto wrong_propensity = [&](FeatureSpec spec) {
    // Rebuild r_terms without the dropped terms; basis indices re-resolve.
    std::vector<Term> kept;
    for (const auto& t : spec.expanded_r_terms()) {
      bool drop = false;
      for (const auto& d : propensity_drop) {
        if (t == d) drop = true;
      }
      if (!drop) kept.push_back(t);
    }
    FeatureSpec out = spec;
    out.r_terms = kept;
    out.n_lagged_actions = 0;  // already expanded into kept
    if (!out.g_identity) {
      // g positions referenced the old expansion; remap by term identity.
      const auto old_terms = spec.expanded_r_terms();
      std::vector<int> remapped;
      for (int pos : out.g_base) {
        const Term& t = old_terms[pos];
        for (int j = 0; j < static_cast<int>(kept.size()); ++j) {
          if (kept[j] == t) remapped.push_back(j);
        }
      }
      out.g_base = remapped;
    }
    if (!out.s_indices.empty()) {
      const auto old_terms = spec.expanded_r_terms();
      std::vector<int> remapped;
      for (int pos : out.s_indices) {
        const Term& t = old_terms[pos];
        for (int j = 0; j < static_cast<int>(kept.size()); ++j) {
          if (kept[j] == t) remapped.push_back(j);
        }
      }
      out.s_indices = remapped;
    }
    return out;
  };

  struct Variant {
    std::string label;
    FeatureSpec spec;
    bool expected_consistent;
  };
  std::vector<Variant> variants;
  variants.push_back({"both_correct", correct_spec, true});
  variants.push_back({"outcome_wrong_propensity_correct", wrong_outcome(correct_spec), true});
  variants.push_back({"outcome_correct_propensity_wrong", wrong_propensity(correct_spec), true});
  variants.push_back(
      {"both_wrong", wrong_propensity(wrong_outcome(correct_spec)), false});

  for (const auto& variant : variants) {
    const auto reps = replicate(scenario, variant.spec, contrast, n_panels, replications,
                                seed, threads, options);
    DoubleRobustnessCell cell;
    cell.label = variant.label;
    cell.cell = summarize(reps, result.truth, n_panels);
    cell.expected_consistent = variant.expected_consistent;
    result.cells.push_back(std::move(cell));
  }
  return result;
}

EfficiencyResult run_efficiency_suite(const ScenarioSpec& scenario, const FeatureSpec& spec,
                                      const Eigen::VectorXd& contrast, int n_panels,
                                      int replications, std::uint64_t seed, int threads,
                                      const EfficientOptions& eff_options) {
  struct Pair {
    double main = 0.0;
    double eff = 0.0;
    double plugin_ratio = 1.0;
    bool ok = false;
  };
  std::vector<Pair> pairs(replications);
  EstimateOptions main_options;
  main_options.clip = eff_options.clip;
  parallel_for(replications, threads, [&](long long r) {
    const std::uint64_t dataset_seed = rng::counter_hash(seed, kDatasetStream, r, n_panels);
    const PanelSet panels = simulate_panels(scenario, n_panels, dataset_seed);
    const RowSet rows = build_rows(panels, spec);
    const ThetaEstimate main_fit = estimate(rows, spec, main_options);
    const EfficientFit eff_fit = fit_efficient(rows, spec, eff_options);
    Pair p;
    p.main = contrast.dot(main_fit.beta);
    p.eff = contrast.dot(eff_fit.beta);
    p.plugin_ratio = eff_fit.variance_ratio_vs_main;
    p.ok = true;
    pairs[static_cast<size_t>(r)] = p;
  });

  MeanVar main_mv, eff_mv, ratio_mv;
  for (const auto& p : pairs) {
    if (!p.ok) continue;
    main_mv.add(p.main);
    eff_mv.add(p.eff);
    ratio_mv.add(p.plugin_ratio);
  }
  EfficiencyResult result;
  result.replications = static_cast<int>(main_mv.n);
  result.var_main = main_mv.variance();
  result.var_efficient = eff_mv.variance();
  result.variance_ratio = result.var_main > 0.0 ? result.var_efficient / result.var_main : 1.0;
  result.mean_plugin_ratio = ratio_mv.mean;

  // Paired comparison of squared deviations from the replication means.
  MeanVar diff;
  for (const auto& p : pairs) {
    if (!p.ok) continue;
    const double dm = p.main - main_mv.mean;
    const double de = p.eff - eff_mv.mean;
    diff.add(dm * dm - de * de);
  }
  result.paired_z = diff.se_of_mean() > 0.0 ? diff.mean / diff.se_of_mean() : 0.0;
  return result;
}

OverlapLimitResult run_overlap_limit_check(const ScenarioSpec& scenario,
                                           const FeatureSpec& wrong_f_spec,
                                           const Term& s_term, int n_panels,
                                           int replications, int limit_panels,
                                           long long oracle_replicates, std::uint64_t seed,
                                           int threads, const EstimateOptions& options) {
  if (wrong_f_spec.f_positions().size() != 0) {
    throw Error(errc::invalid_config, "overlap check expects a constant-only f basis");
  }
  OverlapLimitResult result;

  // Replicated estimates with the deliberately constant f.
  Eigen::VectorXd contrast = Eigen::VectorXd::Zero(1);
  contrast[0] = 1.0;
  const auto reps = replicate(scenario, wrong_f_spec, contrast, n_panels, replications, seed,
                              threads, options);
  MeanVar est;
  for (const auto& r : reps) {
    if (r.ok) est.add(r.estimate);
  }
  result.beta_mean = est.mean;
  result.beta_se = est.se_of_mean();

  // Limit: fit the numerator propensity on one large sample, then accumulate
  // the q(1-q)-weighted moments with the per-(k, s) oracle lag effects.
  const PanelSet big = simulate_panels(scenario, limit_panels, seed ^ 0xA11CEULL);
  const RowSet rows = build_rows(big, wrong_f_spec);
  EstimationProblem problem = make_problem(rows, wrong_f_spec, options);
  const LogisticFit xi_fit = fit_logistic(problem.s_design, problem.a);

  const int max_k = scenario.k_max - wrong_f_spec.lag;
  std::vector<std::vector<double>> zeta(max_k + 1, std::vector<double>(2, 0.0));
  std::vector<std::vector<double>> zeta_se(max_k + 1, std::vector<double>(2, 0.0));
  for (int k = 1; k <= max_k; ++k) {
    for (int s = 0; s <= 1; ++s) {
      ConditioningBin bin;
      bin.term = s_term;
      bin.lo = s - 0.5;
      bin.hi = s + 0.5;
      const OracleEstimate oc = oracle_lag_effect(scenario, k, wrong_f_spec.lag, {bin},
                                                  oracle_replicates,
                                                  rng::counter_hash(seed, 77, k, s), threads);
      zeta[k][s] = oc.value;
      zeta_se[k][s] = oc.mc_se;
      result.zeta_by_cell.push_back(oc.value);
    }
  }

  // The s value per row for the cell lookup.
  KahanSum g_sum, rhs_sum, rhs_var;
  for (int i = 0; i < problem.n_rows(); ++i) {
    const double q = inv_logit(problem.s_design.row(i).dot(xi_fit.coefficients));
    const int k = rows.rows[i].k;
    if (k > max_k) continue;
    const double sval =
        evaluate_term(s_term, big.column_names, big.panels[rows.rows[i].panel_index],
                      k, wrong_f_spec.lag);
    const int s = sval > 0.5 ? 1 : 0;
    const double w = q * (1.0 - q);
    g_sum.add(w);
    rhs_sum.add(w * zeta[k][s]);
    rhs_var.add(w * w * zeta_se[k][s] * zeta_se[k][s]);
  }
  result.beta_limit = rhs_sum.value() / g_sum.value();
  result.limit_mc_se = std::sqrt(rhs_var.value()) / g_sum.value();
  const double joint = std::sqrt(result.beta_se * result.beta_se +
                                 result.limit_mc_se * result.limit_mc_se);
  result.z = joint > 0.0 ? std::abs(result.beta_mean - result.beta_limit) / joint : 0.0;
  return result;
}

double ks_uniform_statistic(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double cdf = sample[i];
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    ks = std::max(ks, std::max(std::abs(cdf - lo), std::abs(cdf - hi)));
  }
  return ks;
}

}  // namespace lageffect
