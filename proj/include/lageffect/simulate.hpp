#pragma once

#include <cstdint>
#include <optional>

#include "lageffect/feature.hpp"
#include "lageffect/panel.hpp"
#include "lageffect/scenario.hpp"

namespace lageffect {

// Exogenous noise stream ids: one counter-based uniform per
// (slot, job index, component), so paired counterfactual worlds consult
// identical draws no matter where their trajectories diverge.
enum class Slot : std::uint64_t {
  Context = 1,
  Decision = 2,
  Outcome = 3,
  Continue = 4,
  Panel = 17,
  Pair = 18,
};

// Two complete trajectories sharing exogenous noise and differing only in
// the decision forced at k_star.
struct WorldPair {
  int k_star = 1;
  Panel world_1;
  Panel world_0;
  int natural_a = 0;        // the decision both worlds would take naturally at k_star
  std::uint64_t shared_seed = 0;
};

struct OracleEstimate {
  double value = 0.0;
  double mc_se = 0.0;
  long long n_effective = 0;  // smaller of the two conditioned arm counts
};

// Interval condition on one feature term, inclusive on both ends.
struct ConditioningBin {
  Term term;
  double lo = 0.0;
  double hi = 0.0;
};

// Deterministic function of (spec, seed); jobs generated in topological
// order X_k -> A_k -> Y_k -> continue.
Panel simulate_panel(const ScenarioSpec& spec, std::uint64_t seed);

PanelSet simulate_panels(const ScenarioSpec& spec, int n_panels, std::uint64_t seed);

// Empty when the shared prefix terminates before k_star.
std::optional<WorldPair> try_simulate_world_pair(const ScenarioSpec& spec, int k_star,
                                                 std::uint64_t seed);

// Throwing variant: k_star_never_reached when the pair cannot be built.
WorldPair simulate_world_pair(const ScenarioSpec& spec, int k_star, std::uint64_t seed);

// Monte Carlo ground truth for the lag effect at (k, lag): each arm averages
// Y_{k+lag}(a) over replicates whose own world satisfies every bin and still
// has a job k+lag. Unconditional when `bins` is empty.
OracleEstimate oracle_lag_effect(const ScenarioSpec& spec, int k, int lag,
                                 const std::vector<ConditioningBin>& bins,
                                 long long replicates, std::uint64_t seed, int threads = 1);

struct IdentificationReport {
  OracleEstimate counterfactual;
  double observational = 0.0;
  double observational_se = 0.0;
  double difference = 0.0;
  double joint_se = 0.0;
  double z = 0.0;
  long long n_treated = 0;
  long long n_control = 0;
};

// Compares the counterfactual oracle against the purely observational
// contrast E[Y|A=1, bins, row exists] - E[Y|A=0, bins, row exists] computed
// on naturally simulated panels.
IdentificationReport check_identification(const ScenarioSpec& spec, int k, int lag,
                                          const std::vector<ConditioningBin>& bins,
                                          long long replicates, std::uint64_t seed,
                                          int threads = 1);

}  // namespace lageffect
