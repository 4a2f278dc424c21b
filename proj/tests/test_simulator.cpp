#include <doctest.h>

#include <cmath>

#include "lageffect/numeric.hpp"
#include "lageffect/simulate.hpp"
#include "support/enumerate.hpp"
#include "support/scenarios.hpp"

using namespace lageffect;
using namespace lageffect::testing;

namespace {

ScenarioSpec constant_one_job_scenario(double p_decision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", logit(p_decision));
  // Y = A exactly; the panel always stops after job 1.
  return ScenarioSpec::from_string(std::string(R"([scenario]
label = tiny
context_dim = 1
k_max = 1
positivity_floor = 0.001

[context 1]
family = constant
coef = const:0

[decision]
coef = const:)") + buf + R"(

[outcome]
coef = a:1.0
noise = none
scale = 0

[continuation]
coef = const:-30
)");
}

}  // namespace

TEST_CASE("constant kernels give K=1 with y = a") {
  const auto spec = constant_one_job_scenario(0.5);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Panel panel = simulate_panel(spec, seed);
    REQUIRE(panel.size() == 1);
    CHECK(panel.jobs[0].y == static_cast<double>(panel.jobs[0].a));
  }
}

TEST_CASE("simulate_panel is deterministic in (spec, seed)") {
  const auto spec = linear_scenario();
  const Panel a = simulate_panel(spec, 987654321);
  const Panel b = simulate_panel(spec, 987654321);
  REQUIRE(a.size() == b.size());
  for (int k = 0; k < a.size(); ++k) {
    CHECK(a.jobs[k].a == b.jobs[k].a);
    CHECK(a.jobs[k].y == b.jobs[k].y);
    CHECK(a.jobs[k].x == b.jobs[k].x);
  }
  const Panel c = simulate_panel(spec, 987654322);
  bool any_diff = a.size() != c.size();
  for (int k = 0; !any_diff && k < a.size(); ++k) any_diff = a.jobs[k].y != c.jobs[k].y;
  CHECK(any_diff);
}

TEST_CASE("decision frequency matches a fixed kernel probability") {
  const auto spec = constant_one_job_scenario(0.3);
  const long long n = 100000;
  long long ones = 0;
  for (long long i = 0; i < n; ++i) {
    ones += simulate_panel(spec, rng::counter_hash(5, 1, i)).jobs[0].a;
  }
  const double phat = static_cast<double>(ones) / static_cast<double>(n);
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(n));
  CHECK(std::abs(phat - 0.3) < 3.0 * sigma);
}

TEST_CASE("panels never exceed k_max") {
  auto spec = linear_scenario();
  spec.continuation.coef[0] = 30.0;  // always continue, cap binds
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(simulate_panel(spec, seed).size() == spec.k_max);
  }
}

TEST_CASE("world pair prefixes agree exactly before k_star") {
  const auto spec = discrete_chain_scenario();
  int built = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto pair = try_simulate_world_pair(spec, 2, seed);
    if (!pair) continue;
    ++built;
    // Proposition 2: everything with index < k_star agrees, and so does
    // X_{k_star}.
    REQUIRE(pair->world_1.size() >= 2);
    REQUIRE(pair->world_0.size() >= 2);
    CHECK(pair->world_1.jobs[0].x == pair->world_0.jobs[0].x);
    CHECK(pair->world_1.jobs[0].a == pair->world_0.jobs[0].a);
    CHECK(pair->world_1.jobs[0].y == pair->world_0.jobs[0].y);
    CHECK(pair->world_1.jobs[1].x == pair->world_0.jobs[1].x);
    CHECK(pair->world_1.jobs[1].a == 1);
    CHECK(pair->world_0.jobs[1].a == 0);
  }
  CHECK(built > 100);
}

TEST_CASE("consistency: the forced world equals the natural trajectory when arms agree") {
  const auto spec = discrete_chain_scenario();
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto pair = try_simulate_world_pair(spec, 1, seed);
    REQUIRE(pair.has_value());  // k_star = 1 always exists
    const Panel natural = simulate_panel(spec, seed);
    const Panel& match = pair->natural_a == 1 ? pair->world_1 : pair->world_0;
    REQUIRE(match.size() == natural.size());
    for (int k = 0; k < natural.size(); ++k) {
      CHECK(match.jobs[k].x == natural.jobs[k].x);
      CHECK(match.jobs[k].a == natural.jobs[k].a);
      CHECK(match.jobs[k].y == natural.jobs[k].y);
    }
  }
}

TEST_CASE("null outcome kernel yields identical outcome sequences across arms") {
  auto spec = discrete_chain_scenario();
  // Remove every decision-dependent path: outcomes, contexts, continuations.
  const auto names = spec.outcome_regressor_names();
  for (int j = 0; j < spec.outcome.coef.size(); ++j) {
    if (names[j] == "a" || names[j] == "aprev" || names[j] == "aprev_x1") {
      spec.outcome.coef[j] = 0.0;
    }
  }
  spec.context[0].coef[1] = 0.0;    // aprev
  spec.continuation.coef[1] = 0.0;  // a
  const auto dnames = spec.decision_regressor_names();
  for (int j = 0; j < spec.decision.coef.size(); ++j) {
    if (dnames[j] == "aprev") spec.decision.coef[j] = 0.0;
  }
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto pair = try_simulate_world_pair(spec, 1, seed);
    REQUIRE(pair.has_value());
    REQUIRE(pair->world_1.size() == pair->world_0.size());
    for (int k = 0; k < pair->world_1.size(); ++k) {
      CHECK(pair->world_1.jobs[k].y == pair->world_0.jobs[k].y);
    }
  }
}

TEST_CASE("pairs that never reach k_star are reported") {
  const auto spec = discrete_scenario();  // k_max = 3
  CHECK_THROWS_AS(simulate_world_pair(spec, 4, 1), Error);
  long long discarded = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    if (!try_simulate_world_pair(spec, 3, seed)) ++discarded;
  }
  CHECK(discarded > 0);
}

TEST_CASE("oracle reports a null effect when decisions do not matter") {
  auto spec = linear_scenario(0.0);
  const auto est = oracle_lag_effect(spec, 1, 1, {}, 20000, 99);
  CHECK(std::abs(est.value) <= 3.0 * est.mc_se);
  CHECK(est.mc_se > 0.0);
}

TEST_CASE("oracle recovers an additive constant effect with fixed K") {
  auto spec = linear_scenario(0.8);
  spec.continuation.coef = Eigen::VectorXd::Zero(spec.continuation_regressor_size());
  spec.continuation.coef[0] = 30.0;  // K = k_max always
  const auto est = oracle_lag_effect(spec, 1, 1, {}, 20000, 7);
  CHECK(std::abs(est.value - 0.8) <= 3.0 * est.mc_se);
}

TEST_CASE("oracle matches the brute-force enumeration of a discrete scenario") {
  const auto spec = discrete_scenario();
  const auto exact = exact_lag_effect(spec, 1, 1);
  const auto mc = oracle_lag_effect(spec, 1, 1, {}, 100000, 4242);
  CHECK(std::abs(mc.value - exact.value) <= 3.0 * mc.mc_se);

  // Chained scenario at k = 2 with a conditioning bin on the current context.
  const auto chain = discrete_chain_scenario();
  std::vector<ConditioningBin> bins;
  bins.push_back({Term::parse("x1"), 0.5, 1.5});
  const auto exact2 = exact_lag_effect(chain, 2, 1, bins);
  const auto mc2 = oracle_lag_effect(chain, 2, 1, bins, 100000, 777);
  CHECK(std::abs(mc2.value - exact2.value) <= 3.0 * mc2.mc_se);
}

TEST_CASE("oracle mc_se shrinks like one over sqrt(n)") {
  const auto spec = discrete_scenario();
  const auto small = oracle_lag_effect(spec, 1, 1, {}, 20000, 31);
  const auto big = oracle_lag_effect(spec, 1, 1, {}, 80000, 31);
  const double ratio = small.mc_se / big.mc_se;
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("oracle rejects conditioning bins nothing satisfies") {
  const auto spec = discrete_scenario();
  std::vector<ConditioningBin> bins;
  bins.push_back({Term::parse("x1"), 5.0, 6.0});
  CHECK_THROWS_AS(oracle_lag_effect(spec, 1, 1, bins, 1000, 3), Error);
}

TEST_CASE("identification holds given the full conditioning set") {
  const auto spec = discrete_scenario();
  // R_k bin pins the parents the decision actually uses: X_k and A_{k-1};
  // at k = 1 the lagged decision is structurally zero.
  std::vector<ConditioningBin> bins;
  bins.push_back({Term::parse("x1"), 0.5, 1.5});
  const auto report = check_identification(spec, 1, 1, bins, 200000, 2024);
  CHECK(report.z <= 3.0);
}

TEST_CASE("identification fails under an omitted common cause") {
  const auto spec = confounded_scenario();
  // X_1 drives both A_1 and Y_2 but the conditioning set omits it.
  const auto report = check_identification(spec, 1, 1, {}, 200000, 2025);
  CHECK(report.z >= 5.0);
}
