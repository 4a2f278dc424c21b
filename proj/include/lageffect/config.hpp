#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lageffect/feature.hpp"
#include "lageffect/keyvalue.hpp"
#include "lageffect/simulate.hpp"

namespace lageffect {

// Shared [features] block.
struct FeatureConfig {
  std::vector<Term> r_terms;
  int n_lagged_actions = 0;
  std::vector<std::string> g_base_terms;  // empty + g_all -> identity
  bool g_all = true;

  FeatureSpec to_spec(int lag, const std::vector<Term>& s_terms) const;
  static FeatureConfig from_section(const KvSection& section);
};

struct AnalysisConfig {
  std::string input_path;
  std::string output_dir;
  int lag = 1;
  double clip = 1e-3;
  int min_panel_size = 3;
  FeatureConfig features;
  std::vector<std::string> s_choices;     // "none" or a term among r_terms
  std::vector<int> propensity_lag_grid;   // QICu grid over lagged-action counts
  int threads = 0;

  static AnalysisConfig from_file(const std::string& path);
  static AnalysisConfig from_string(const std::string& text);
  std::string echo() const;  // resolved values, for provenance
};

struct IdentificationTask {
  std::string label = "identification";
  std::string scenario_path;  // empty -> study scenario
  int k = 1;
  std::vector<ConditioningBin> bins;
};

struct StudyConfig {
  std::string scenario_path;
  std::string output_dir;
  std::vector<int> n_panels;
  int replications = 500;
  std::uint64_t seed = 1;
  long long oracle_replicates = 100000;
  std::vector<std::string> suites;
  int lag = 1;
  double clip = 1e-3;
  int threads = 0;
  FeatureConfig features;
  std::vector<Term> s_terms;  // S_k for the estimation suites

  // double_robustness
  std::vector<Term> outcome_drop;
  std::vector<Term> propensity_drop;
  int dr_n_panels = 0;  // 0 -> first grid entry

  // efficiency
  std::string efficiency_scenario_path;  // empty -> study scenario
  int efficiency_n_panels = 0;

  // overlap
  std::string overlap_scenario_path;
  Term overlap_s_term;
  bool has_overlap_s_term = false;
  int overlap_limit_panels = 20000;
  int overlap_n_panels = 0;

  std::vector<IdentificationTask> identification;

  static StudyConfig from_file(const std::string& path);
  static StudyConfig from_string(const std::string& text);
  std::string echo() const;
};

// Batch drivers; every reported number comes from library calls. Both write
// their outputs under output_dir and return the list of files written.
std::vector<std::string> run_analysis(const AnalysisConfig& config);
std::vector<std::string> run_study(const StudyConfig& config);

}  // namespace lageffect
