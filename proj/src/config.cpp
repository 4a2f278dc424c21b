#include "lageffect/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lageffect/efficient.hpp"
#include "lageffect/estimator.hpp"
#include "lageffect/glm.hpp"
#include "lageffect/numeric.hpp"
#include "lageffect/report.hpp"
#include "lageffect/study.hpp"

namespace lageffect {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<ConditioningBin> parse_bins(const std::string& value) {
  std::vector<ConditioningBin> bins;
  for (const auto& token : split_list(value)) {
    // term:lo:hi, splitting on the two rightmost colons
    const auto c2 = token.rfind(':');
    if (c2 == std::string::npos) {
      throw Error(errc::invalid_config, "bin '" + token + "': expected term:lo:hi");
    }
    const auto c1 = token.rfind(':', c2 - 1);
    if (c1 == std::string::npos) {
      throw Error(errc::invalid_config, "bin '" + token + "': expected term:lo:hi");
    }
    ConditioningBin bin;
    bin.term = Term::parse(token.substr(0, c1));
    bin.lo = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
    bin.hi = std::stod(token.substr(c2 + 1));
    bins.push_back(std::move(bin));
  }
  return bins;
}

std::string join_terms(const std::vector<Term>& terms) {
  std::string out;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i) out += ", ";
    out += terms[i].to_string();
  }
  return out;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content,
                std::vector<std::string>& written) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw Error(errc::io_error, "cannot write '" + path + "'");
  out << content;
  written.push_back(path);
}

std::string cell_tsv_header() {
  return "n_panels\treplications\ttruth\tmean_estimate\tbias\tsd_estimate\tse_of_mean\t"
         "rmse\tmean_reported_se\tcoverage\trejection_rate\tmean_clip_events\n";
}

std::string cell_tsv_row(const ReplicationCell& c) {
  std::ostringstream out;
  out << c.n_panels << '\t' << c.replications << '\t' << num(c.truth) << '\t'
      << num(c.mean_estimate) << '\t' << num(c.bias) << '\t' << num(c.sd_estimate) << '\t'
      << num(c.se_of_mean) << '\t' << num(c.rmse) << '\t' << num(c.mean_reported_se) << '\t'
      << num(c.coverage) << '\t' << num(c.rejection_rate) << '\t' << num(c.mean_clip_events)
      << '\n';
  return out.str();
}

}  // namespace

FeatureSpec FeatureConfig::to_spec(int lag, const std::vector<Term>& s_terms) const {
  FeatureSpec spec;
  spec.lag = lag;
  spec.r_terms = r_terms;
  spec.n_lagged_actions = n_lagged_actions;
  const auto expanded = spec.expanded_r_terms();
  auto position_of = [&](const Term& t) {
    for (size_t i = 0; i < expanded.size(); ++i) {
      if (expanded[i] == t) return static_cast<int>(i);
    }
    throw Error(errc::invalid_config, "term '" + t.to_string() + "' not among r_terms");
  };
  for (const auto& t : s_terms) spec.s_indices.push_back(position_of(t));
  if (!g_all) {
    spec.g_identity = false;
    for (const auto& name : g_base_terms) {
      spec.g_base.push_back(position_of(Term::parse(name)));
    }
  }
  return spec;
}

FeatureConfig FeatureConfig::from_section(const KvSection& section) {
  FeatureConfig fc;
  fc.r_terms = parse_terms(section.get("r_terms"));
  fc.n_lagged_actions = section.get_int_or("n_lagged_actions", 0);
  const std::string g = section.get_or("g_base", "all");
  if (g != "all") {
    fc.g_all = false;
    fc.g_base_terms = split_list(g);
  }
  return fc;
}

AnalysisConfig AnalysisConfig::from_string(const std::string& text) {
  const KvDocument doc = KvDocument::parse(text);
  const KvSection& top = doc.require("analysis");
  AnalysisConfig config;
  config.input_path = top.get("input");
  config.output_dir = top.get("output_dir");
  config.lag = top.get_int_or("lag", 1);
  if (config.lag < 1) throw Error(errc::invalid_config, "lag must be >= 1");
  config.clip = top.get_double_or("clip", 1e-3);
  config.min_panel_size = top.get_int_or("min_panel_size", 3);
  config.threads = top.get_int_or("threads", 0);
  config.features = FeatureConfig::from_section(doc.require("features"));
  const KvSection& feats = doc.require("features");
  for (const auto& choice : split_list(feats.get_or("s_choices", "none"))) {
    config.s_choices.push_back(choice);
  }
  if (const KvSection* grid = doc.find("propensity_grid")) {
    for (const auto& v : split_list(grid->get("lagged_actions"))) {
      config.propensity_lag_grid.push_back(std::stoi(v));
    }
  }
  // Validate s choices against the expanded term list now, before any work.
  const FeatureSpec probe = config.features.to_spec(config.lag, {});
  const auto expanded = probe.expanded_r_terms();
  for (const auto& choice : config.s_choices) {
    if (choice == "none") continue;
    const Term t = Term::parse(choice);
    if (std::find(expanded.begin(), expanded.end(), t) == expanded.end()) {
      throw Error(errc::invalid_config,
                  "s_choices entry '" + choice + "' is not among r_terms");
    }
  }
  return config;
}

AnalysisConfig AnalysisConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_string(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " [" + path + "]");
  }
}

std::string AnalysisConfig::echo() const {
  std::ostringstream out;
  out << "[analysis]\n";
  out << "input = " << input_path << '\n';
  out << "output_dir = " << output_dir << '\n';
  out << "lag = " << lag << '\n';
  out << "clip = " << num(clip) << '\n';
  out << "min_panel_size = " << min_panel_size << '\n';
  out << "threads = " << threads << "\n\n";
  out << "[features]\n";
  out << "r_terms = " << join_terms(features.r_terms) << '\n';
  out << "n_lagged_actions = " << features.n_lagged_actions << '\n';
  out << "g_base = ";
  if (features.g_all) {
    out << "all";
  } else {
    for (size_t i = 0; i < features.g_base_terms.size(); ++i) {
      out << (i ? ", " : "") << features.g_base_terms[i];
    }
  }
  out << '\n';
  out << "s_choices = ";
  for (size_t i = 0; i < s_choices.size(); ++i) out << (i ? ", " : "") << s_choices[i];
  out << '\n';
  if (!propensity_lag_grid.empty()) {
    out << "\n[propensity_grid]\nlagged_actions = ";
    for (size_t i = 0; i < propensity_lag_grid.size(); ++i) {
      out << (i ? " " : "") << propensity_lag_grid[i];
    }
    out << '\n';
  }
  return out.str();
}

StudyConfig StudyConfig::from_string(const std::string& text) {
  const KvDocument doc = KvDocument::parse(text);
  const KvSection& top = doc.require("study");
  StudyConfig config;
  config.scenario_path = top.get("scenario");
  config.output_dir = top.get("output_dir");
  for (const auto& v : split_list(top.get_or("n_panels", "100 400 1600"))) {
    config.n_panels.push_back(std::stoi(v));
  }
  config.replications = top.get_int_or("replications", 500);
  if (config.replications < 1) throw Error(errc::invalid_config, "replications must be >= 1");
  config.seed = static_cast<std::uint64_t>(top.get_double_or("seed", 1));
  config.oracle_replicates = top.get_int_or("oracle_replicates", 100000);
  config.suites = split_list(top.get_or(
      "suites", "consistency coverage double_robustness efficiency identification overlap"));
  config.lag = top.get_int_or("lag", 1);
  config.clip = top.get_double_or("clip", 1e-3);
  config.threads = top.get_int_or("threads", 0);
  config.features = FeatureConfig::from_section(doc.require("features"));
  const std::string s_terms = doc.require("features").get_or("s_terms", "none");
  if (s_terms != "none") config.s_terms = parse_terms(s_terms);

  if (const KvSection* dr = doc.find("double_robustness")) {
    config.outcome_drop = parse_terms(dr->get_or("outcome_drop", ""));
    config.propensity_drop = parse_terms(dr->get_or("propensity_drop", ""));
    config.dr_n_panels = dr->get_int_or("n_panels", 0);
  }
  if (const KvSection* eff = doc.find("efficiency")) {
    config.efficiency_scenario_path = eff->get_or("scenario", "");
    config.efficiency_n_panels = eff->get_int_or("n_panels", 0);
  }
  if (const KvSection* ov = doc.find("overlap")) {
    config.overlap_scenario_path = ov->get_or("scenario", "");
    if (ov->has("s_term")) {
      config.overlap_s_term = Term::parse(ov->get("s_term"));
      config.has_overlap_s_term = true;
    }
    config.overlap_limit_panels = ov->get_int_or("limit_panels", 20000);
    config.overlap_n_panels = ov->get_int_or("n_panels", 0);
  }
  for (const KvSection* id : doc.all("identification")) {
    IdentificationTask task;
    task.label = id->get_or("label", "identification");
    task.scenario_path = id->get_or("scenario", "");
    task.k = id->get_int_or("k", 1);
    if (id->has("bins")) task.bins = parse_bins(id->get("bins"));
    config.identification.push_back(std::move(task));
  }
  return config;
}

StudyConfig StudyConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_string(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " [" + path + "]");
  }
}

std::string StudyConfig::echo() const {
  std::ostringstream out;
  out << "[study]\n";
  out << "scenario = " << scenario_path << '\n';
  out << "output_dir = " << output_dir << '\n';
  out << "n_panels = ";
  for (size_t i = 0; i < n_panels.size(); ++i) out << (i ? " " : "") << n_panels[i];
  out << '\n';
  out << "replications = " << replications << '\n';
  out << "seed = " << seed << '\n';
  out << "oracle_replicates = " << oracle_replicates << '\n';
  out << "suites = ";
  for (size_t i = 0; i < suites.size(); ++i) out << (i ? " " : "") << suites[i];
  out << '\n';
  out << "lag = " << lag << '\n';
  out << "clip = " << num(clip) << '\n';
  out << "threads = " << threads << '\n';
  out << "\n[features]\n";
  out << "r_terms = " << join_terms(features.r_terms) << '\n';
  out << "n_lagged_actions = " << features.n_lagged_actions << '\n';
  out << "s_terms = " << (s_terms.empty() ? "none" : join_terms(s_terms)) << '\n';
  return out.str();
}

std::vector<std::string> run_analysis(const AnalysisConfig& config) {
  std::vector<std::string> written;
  const int threads = resolve_threads(config.threads);

  PanelSet panels = parse_panels_file(config.input_path);
  // Exclusion threshold mirrors the fewer-than-N-visits filter; configurable.
  if (config.min_panel_size > 1) {
    std::vector<Panel> kept;
    for (auto& p : panels.panels) {
      if (p.size() >= config.min_panel_size) kept.push_back(std::move(p));
    }
    panels.panels = std::move(kept);
  }
  if (panels.panels.empty()) throw Error(errc::no_rows, "no panels after filtering");

  EstimateOptions options;
  options.clip = config.clip;
  options.threads = threads;

  std::ostringstream diag;
  diag << "{\n";
  diag << "  \"n_panels\": " << panels.n_panels() << ",\n";
  diag << "  \"total_jobs\": " << panels.total_jobs() << ",\n";

  // Propensity model selection by QICu over the lagged-action grid.
  FeatureConfig features = config.features;
  if (!config.propensity_lag_grid.empty()) {
    diag << "  \"propensity_grid\": [\n";
    double best = std::numeric_limits<double>::infinity();
    int best_i = features.n_lagged_actions;
    for (size_t gi = 0; gi < config.propensity_lag_grid.size(); ++gi) {
      const int i = config.propensity_lag_grid[gi];
      FeatureConfig candidate = config.features;
      candidate.n_lagged_actions = i;
      const FeatureSpec spec = candidate.to_spec(config.lag, {});
      const RowSet rows = build_rows(panels, spec);
      const EstimationProblem problem = make_problem(rows, spec, options);
      const LogisticFit fit = fit_logistic(problem.r_design, problem.a);
      const double score = qicu(fit, problem.r_design, problem.a);
      diag << "    {\"lagged_actions\": " << i << ", \"qicu\": " << num(score) << "}"
           << (gi + 1 < config.propensity_lag_grid.size() ? "," : "") << "\n";
      if (score < best) {
        best = score;
        best_i = i;
      }
    }
    diag << "  ],\n";
    diag << "  \"selected_lagged_actions\": " << best_i << ",\n";
    features.n_lagged_actions = best_i;
  }

  std::vector<ReportRow> report_rows;
  diag << "  \"runs\": [\n";
  for (size_t ci = 0; ci < config.s_choices.size(); ++ci) {
    const std::string& choice = config.s_choices[ci];
    std::vector<Term> s_terms;
    if (choice != "none") s_terms.push_back(Term::parse(choice));
    const FeatureSpec spec = features.to_spec(config.lag, s_terms);
    const RowSet rows = build_rows(panels, spec);
    const ThetaEstimate est = estimate(rows, spec, options);

    ReportRow row;
    Eigen::VectorXd contrast = Eigen::VectorXd::Zero(est.beta.size());
    if (choice == "none") {
      // Main effect: f = [1].
      row.variable = "(none)";
      contrast[0] = 1.0;
    } else {
      // Interaction f(1)'beta - f(0)'beta for the binary S variable.
      row.variable = choice;
      contrast[1] = 1.0;
    }
    row.wald = wald(est, contrast);
    report_rows.push_back(row);

    diag << "    {\"s\": \"" << row.variable << "\", \"clip_events\": " << est.clip_events
         << ", \"xi_iterations\": " << est.xi_iterations
         << ", \"eta_iterations\": " << est.eta_iterations
         << ", \"bread_condition\": " << num(est.bread_condition)
         << ", \"score_max_norm\": " << num(est.score_max_norm)
         << ", \"dropped_qf_columns\": " << est.dropped_qf_columns.size() << "}"
         << (ci + 1 < config.s_choices.size() ? "," : "") << "\n";
  }
  diag << "  ]\n}\n";

  write_file(config.output_dir, "report.tsv", render_report_tsv(report_rows), written);
  write_file(config.output_dir, "diagnostics.json", diag.str(), written);
  write_file(config.output_dir, "config_echo.txt", config.echo(), written);
  return written;
}

std::vector<std::string> run_study(const StudyConfig& config) {
  std::vector<std::string> written;
  const int threads = resolve_threads(config.threads);
  const ScenarioSpec scenario = ScenarioSpec::from_file(config.scenario_path);

  EstimateOptions options;
  options.clip = config.clip;

  const FeatureSpec spec = config.features.to_spec(config.lag, config.s_terms);
  Eigen::VectorXd contrast = Eigen::VectorXd::Zero(1 + spec.f_positions().size());
  contrast[0] = 1.0;

  auto has_suite = [&](const std::string& name) {
    return std::find(config.suites.begin(), config.suites.end(), name) != config.suites.end();
  };

  if (has_suite("consistency")) {
    const ConsistencyResult result =
        run_consistency_suite(scenario, spec, contrast, config.n_panels, config.replications,
                              config.oracle_replicates, config.seed, threads, options);
    std::ostringstream out;
    out << "# truth = " << num(result.truth) << " (mc_se " << num(result.truth_mc_se) << ")\n";
    out << cell_tsv_header();
    for (const auto& cell : result.cells) out << cell_tsv_row(cell);
    write_file(config.output_dir, "consistency.tsv", out.str(), written);
  }
  if (has_suite("coverage")) {
    const OracleEstimate truth =
        oracle_lag_effect(scenario, 1, config.lag, {}, config.oracle_replicates,
                          config.seed ^ 0xF00DULL, threads);
    const CoverageResult result =
        run_coverage_suite(scenario, spec, contrast, truth.value, config.n_panels.front(),
                           config.replications, config.seed + 1, threads, options);
    std::ostringstream out;
    out << "# ks_statistic = " << num(result.ks_statistic) << "\n";
    out << cell_tsv_header() << cell_tsv_row(result.cell);
    out << "p_values";
    for (double p : result.p_values) out << '\t' << num(p);
    out << '\n';
    write_file(config.output_dir, "coverage.tsv", out.str(), written);
  }
  if (has_suite("double_robustness")) {
    const int n = config.dr_n_panels > 0 ? config.dr_n_panels : config.n_panels.front();
    const DoubleRobustnessResult result = run_double_robustness_suite(
        scenario, spec, config.outcome_drop, config.propensity_drop, contrast, n,
        config.replications, config.oracle_replicates, config.seed + 2, threads, options);
    std::ostringstream out;
    out << "# truth = " << num(result.truth) << " (mc_se " << num(result.truth_mc_se) << ")\n";
    out << "cell\texpected_consistent\t" << cell_tsv_header();
    for (const auto& cell : result.cells) {
      out << cell.label << '\t' << (cell.expected_consistent ? 1 : 0) << '\t'
          << cell_tsv_row(cell.cell);
    }
    write_file(config.output_dir, "double_robustness.tsv", out.str(), written);
  }
  if (has_suite("efficiency")) {
    const ScenarioSpec eff_scenario = config.efficiency_scenario_path.empty()
                                          ? scenario
                                          : ScenarioSpec::from_file(config.efficiency_scenario_path);
    // S = R for the efficient score.
    FeatureSpec eff_spec = spec;
    eff_spec.s_indices.clear();
    const auto expanded = eff_spec.expanded_r_terms();
    for (int i = 0; i < static_cast<int>(expanded.size()); ++i) eff_spec.s_indices.push_back(i);
    Eigen::VectorXd eff_contrast = Eigen::VectorXd::Zero(1 + eff_spec.f_positions().size());
    eff_contrast[0] = 1.0;
    EfficientOptions eff_options;
    eff_options.clip = config.clip;
    const int n = config.efficiency_n_panels > 0 ? config.efficiency_n_panels
                                                 : config.n_panels.front();
    const EfficiencyResult result =
        run_efficiency_suite(eff_scenario, eff_spec, eff_contrast, n, config.replications,
                             config.seed + 3, threads, eff_options);
    std::ostringstream out;
    out << "replications\tvar_main\tvar_efficient\tvariance_ratio\tpaired_z\tmean_plugin_ratio\n";
    out << result.replications << '\t' << num(result.var_main) << '\t'
        << num(result.var_efficient) << '\t' << num(result.variance_ratio) << '\t'
        << num(result.paired_z) << '\t' << num(result.mean_plugin_ratio) << '\n';
    write_file(config.output_dir, "efficiency.tsv", out.str(), written);
  }
  if (has_suite("identification")) {
    std::ostringstream out;
    out << "label\tk\tcounterfactual\tcf_mc_se\tobservational\tobs_se\tdifference\tjoint_se\tz\n";
    for (const auto& task : config.identification) {
      const ScenarioSpec sc = task.scenario_path.empty()
                                  ? scenario
                                  : ScenarioSpec::from_file(task.scenario_path);
      const IdentificationReport report = check_identification(
          sc, task.k, config.lag, task.bins, config.oracle_replicates, config.seed + 4, threads);
      out << task.label << '\t' << task.k << '\t' << num(report.counterfactual.value) << '\t'
          << num(report.counterfactual.mc_se) << '\t' << num(report.observational) << '\t'
          << num(report.observational_se) << '\t' << num(report.difference) << '\t'
          << num(report.joint_se) << '\t' << num(report.z) << '\n';
    }
    write_file(config.output_dir, "identification.tsv", out.str(), written);
  }
  if (has_suite("overlap")) {
    if (!config.has_overlap_s_term) {
      throw Error(errc::invalid_config, "[overlap] needs s_term");
    }
    const ScenarioSpec ov_scenario = config.overlap_scenario_path.empty()
                                         ? scenario
                                         : ScenarioSpec::from_file(config.overlap_scenario_path);
    FeatureSpec wrong_f = config.features.to_spec(config.lag, {config.overlap_s_term});
    wrong_f.f_identity = false;
    wrong_f.f_basis.clear();  // constant-only f
    const int n = config.overlap_n_panels > 0 ? config.overlap_n_panels
                                              : config.n_panels.front();
    const OverlapLimitResult result = run_overlap_limit_check(
        ov_scenario, wrong_f, config.overlap_s_term, n, config.replications,
        config.overlap_limit_panels, config.oracle_replicates, config.seed + 5, threads,
        options);
    std::ostringstream out;
    out << "beta_mean\tbeta_se\tbeta_limit\tlimit_mc_se\tz\n";
    out << num(result.beta_mean) << '\t' << num(result.beta_se) << '\t'
        << num(result.beta_limit) << '\t' << num(result.limit_mc_se) << '\t' << num(result.z)
        << '\n';
    write_file(config.output_dir, "overlap.tsv", out.str(), written);
  }
  write_file(config.output_dir, "config_echo.txt", config.echo(), written);
  return written;
}

}  // namespace lageffect
