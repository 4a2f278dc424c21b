#pragma once

// Canonical synthetic scenarios shared by the unit and acceptance suites.
// All of them keep the decision/outcome kernels inside the family the
// estimation feature terms can represent, except where a test deliberately
// breaks that (confounding, misspecification).

#include <cstdio>
#include <string>

#include "lageffect/scenario.hpp"

namespace lageffect::testing {

// d=1 binary context, K_max=3; fully discrete so the pair tree is
// enumerable. Outcome noise is Rademacher unless `noiseless`.
inline ScenarioSpec discrete_scenario(bool noiseless = false) {
  const std::string text = std::string(R"([scenario]
label = discrete
context_dim = 1
k_max = 3
positivity_floor = 0.05

[context 1]
family = bernoulli
coef = const:0.2 aprev:0.0

[decision]
coef = const:-0.3 x1:0.9 aprev:0.6

[outcome]
coef = const:0.5 x1:1.0 aprev:0.8 xprev1:-0.4
)") + (noiseless ? "noise = none\nscale = 0\n" : "noise = rademacher\nscale = 0.7\n") +
                           R"(
[continuation]
coef = const:0.6 x1:0.3
)";
  return ScenarioSpec::from_string(text);
}

// Discrete scenario with chains: the intervention shifts the next context
// and the continuation, so indirect paths matter for the oracle.
inline ScenarioSpec discrete_chain_scenario() {
  return ScenarioSpec::from_string(R"([scenario]
label = discrete-chain
context_dim = 1
k_max = 3
positivity_floor = 0.05

[context 1]
family = bernoulli
coef = const:0.1 aprev:0.8 yprev:0.2

[decision]
coef = const:-0.2 x1:0.7 aprev:0.5

[outcome]
coef = const:0.3 a:0.4 x1:1.1 aprev:0.9 xprev1:-0.3 yprev:0.2
noise = rademacher
scale = 0.5

[continuation]
coef = const:0.4 a:0.5 x1:0.2 y:0.1
)");
}

// Workhorse for consistency / coverage: two contexts (one normal, one
// binary), constant direct lag effect tau = 0.8, every working model
// correctly specified by construction (no a -> own outcome path, no
// a -> context/continuation paths).
inline ScenarioSpec linear_scenario(double tau = 0.8) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", tau);
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = linear
context_dim = 2
k_max = 8
positivity_floor = 0.01

[context 1]
family = normal
coef = const:0
scale = 1

[context 2]
family = bernoulli
coef = const:-0.4

[decision]
coef = const:-0.2 x1:0.8 x2:0.5 aprev:0.6

[outcome]
coef = const:1.0 x1:1.0 x2:-0.5 xprev1:0.4 aprev:)") + buf + R"(
noise = normal
scale = 1

[continuation]
coef = const:0.9 x1:0.2
)");
}

inline ScenarioSpec null_scenario() { return linear_scenario(0.0); }

// Heterogeneous lag effect in the future job's binary context x2:
// zeta_marg(s) = tau + gamma * s.
inline ScenarioSpec heterogeneous_scenario(double tau = 0.5, double gamma = 1.2) {
  char b1[64], b2[64];
  std::snprintf(b1, sizeof(b1), "%.17g", tau);
  std::snprintf(b2, sizeof(b2), "%.17g", gamma);
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = heterogeneous
context_dim = 2
k_max = 5
positivity_floor = 0.01

[context 1]
family = normal
coef = const:0
scale = 1

[context 2]
family = bernoulli
coef = const:0

[decision]
coef = const:-0.1 x1:0.6 x2:0.7 aprev:0.4

[outcome]
coef = const:1.0 x1:0.8 x2:-0.4 xprev1:0.3 aprev:)") + b1 + " aprev_x2:" + b2 + R"(
noise = normal
scale = 1

[continuation]
coef = const:0.8
)");
}

// Quadratic pieces on both sides for the double-robustness grid: the
// decision kernel needs X_k^2, the outcome kernel needs X_{k+1}^2.
inline ScenarioSpec quadratic_scenario(double tau = 0.8) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", tau);
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = quadratic
context_dim = 1
k_max = 8
positivity_floor = 0.01

[context 1]
family = normal
coef = const:0
scale = 1

[decision]
coef = const:-0.3 x1:0.7 xsq1:0.6 aprev:0.5

[outcome]
coef = const:0.5 x1:0.9 xsq1:0.8 xprev1:0.4 aprev:)") + buf + R"(
noise = normal
scale = 1

[continuation]
coef = const:0.9
)");
}

// Strong common cause X_k of A_k and Y_{k+1}; an analysis that omits X_k
// from R_k is confounded.
inline ScenarioSpec confounded_scenario() {
  return ScenarioSpec::from_string(R"([scenario]
label = confounded
context_dim = 1
k_max = 4
positivity_floor = 0.05

[context 1]
family = bernoulli
coef = const:0

[decision]
coef = const:-1.0 x1:2.2

[outcome]
coef = const:0.2 x1:0.5 xprev1:1.8 aprev:0.5
noise = rademacher
scale = 0.5

[continuation]
coef = const:0.8
)");
}

// Outcome noise SD driven by the future job's binary context: 0.5 vs 2.5,
// a 5:1 ratio. S = R = (x of the future job) for the efficiency suite.
inline ScenarioSpec heteroskedastic_scenario(double tau = 0.6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", tau);
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = heteroskedastic
context_dim = 1
k_max = 6
positivity_floor = 0.01

[context 1]
family = bernoulli
coef = const:0

[decision]
coef = const:-0.2 x1:0.8 aprev:0.4

[outcome]
coef = const:1.0 x1:0.7 xprev1:0.3 aprev:)") + buf + R"(
noise = normal
scale = 1
sd_coef = const:0.5 x1:2.0

[continuation]
coef = const:0.9
)");
}

// Saturated single-binary-context design for the exact algebraic checks
// (W = 1 when S = R, efficient-score equivalence under unit sigma).
inline ScenarioSpec saturated_scenario(double tau = 0.7) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", tau);
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = saturated
context_dim = 1
k_max = 6
positivity_floor = 0.05

[context 1]
family = bernoulli
coef = const:0.3

[decision]
coef = const:-0.4 x1:1.0 aprev:0.5

[outcome]
coef = const:0.8 x1:0.9 xprev1:0.2 aprev:)") + buf + R"(
noise = normal
scale = 1

[continuation]
coef = const:0.9
)");
}

}  // namespace lageffect::testing
