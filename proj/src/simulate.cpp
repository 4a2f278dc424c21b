#include "lageffect/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "lageffect/numeric.hpp"

namespace lageffect {

namespace {

using rng::uniform01;

double clamp_prob(double p, double floor) {
  return std::min(std::max(p, floor), 1.0 - floor);
}

double noise_draw(NoiseKind kind, double u) {
  switch (kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Normal: return inv_norm_cdf(u);
    case NoiseKind::Rademacher: return u < 0.5 ? -1.0 : 1.0;
    case NoiseKind::Uniform: return 2.0 * u - 1.0;
  }
  return 0.0;
}

// Regressor assembly; previous-job values are zero for k = 1.
struct KernelInputs {
  const ScenarioSpec& spec;
  const Panel& traj;
  int k;  // 1-based

  double aprev() const { return k >= 2 ? traj.jobs[k - 2].a : 0.0; }
  double yprev() const { return k >= 2 ? traj.jobs[k - 2].y : 0.0; }
  double xprev(int j) const { return k >= 2 ? traj.jobs[k - 2].x[j] : 0.0; }

  Eigen::VectorXd context_z() const {
    const int d = spec.context_dim;
    Eigen::VectorXd z(3 + d);
    z[0] = 1.0;
    z[1] = aprev();
    z[2] = yprev();
    for (int j = 0; j < d; ++j) z[3 + j] = xprev(j);
    return z;
  }

  Eigen::VectorXd decision_z(const Eigen::VectorXd& x) const {
    const int d = spec.context_dim;
    Eigen::VectorXd z(3 + 3 * d);
    int at = 0;
    z[at++] = 1.0;
    for (int j = 0; j < d; ++j) z[at++] = x[j];
    for (int j = 0; j < d; ++j) z[at++] = x[j] * x[j];
    z[at++] = aprev();
    z[at++] = yprev();
    for (int j = 0; j < d; ++j) z[at++] = xprev(j);
    return z;
  }

  Eigen::VectorXd outcome_z(const Eigen::VectorXd& x, double a) const {
    const int d = spec.context_dim;
    Eigen::VectorXd z(4 + 4 * d);
    int at = 0;
    z[at++] = 1.0;
    z[at++] = a;
    for (int j = 0; j < d; ++j) z[at++] = x[j];
    for (int j = 0; j < d; ++j) z[at++] = x[j] * x[j];
    z[at++] = aprev();
    z[at++] = yprev();
    for (int j = 0; j < d; ++j) z[at++] = xprev(j);
    for (int j = 0; j < d; ++j) z[at++] = aprev() * x[j];
    return z;
  }

  Eigen::VectorXd continuation_z(const Eigen::VectorXd& x, double a, double y) const {
    const int d = spec.context_dim;
    Eigen::VectorXd z(3 + d);
    z[0] = 1.0;
    z[1] = a;
    z[2] = y;
    for (int j = 0; j < d; ++j) z[3 + j] = x[j];
    return z;
  }
};

// Advances one trajectory by one job. forced < 0 means no intervention.
// Returns false when the panel terminates after this job.
bool simulate_job(const ScenarioSpec& spec, std::uint64_t seed, Panel& traj, int k,
                  int forced, int* natural_out) {
  KernelInputs in{spec, traj, k};
  Job job;
  job.x.resize(spec.context_dim);
  const Eigen::VectorXd zc = in.context_z();
  for (int j = 0; j < spec.context_dim; ++j) {
    const ContextKernel& kernel = spec.context[j];
    const double u = uniform01(seed, static_cast<std::uint64_t>(Slot::Context), k, j);
    const double idx = kernel.coef.dot(zc);
    switch (kernel.family) {
      case ContextFamily::Bernoulli:
        job.x[j] = u < inv_logit(idx) ? 1.0 : 0.0;
        break;
      case ContextFamily::Normal:
        job.x[j] = idx + kernel.scale * inv_norm_cdf(u);
        break;
      case ContextFamily::Uniform:
        job.x[j] = idx + kernel.scale * (2.0 * u - 1.0);
        break;
      case ContextFamily::Constant:
        job.x[j] = idx;
        break;
    }
  }

  const double ua = uniform01(seed, static_cast<std::uint64_t>(Slot::Decision), k, 0);
  const double pa =
      clamp_prob(inv_logit(spec.decision.coef.dot(in.decision_z(job.x))), spec.positivity_floor);
  const int natural = ua < pa ? 1 : 0;
  if (natural_out) *natural_out = natural;
  job.a = forced >= 0 ? forced : natural;

  const Eigen::VectorXd zy = in.outcome_z(job.x, job.a);
  const double uy = uniform01(seed, static_cast<std::uint64_t>(Slot::Outcome), k, 0);
  double sd = spec.outcome.noise_scale;
  if (spec.outcome.sd_coef.size() != 0) sd = std::abs(spec.outcome.sd_coef.dot(zy));
  job.y = spec.outcome.coef.dot(zy) + sd * noise_draw(spec.outcome.noise, uy);

  traj.jobs.push_back(std::move(job));
  if (k >= spec.k_max) return false;
  const double uc = uniform01(seed, static_cast<std::uint64_t>(Slot::Continue), k, 0);
  const double pc = inv_logit(spec.continuation.coef.dot(
      in.continuation_z(traj.jobs.back().x, traj.jobs.back().a, traj.jobs.back().y)));
  return uc < pc;
}

Panel simulate_trajectory(const ScenarioSpec& spec, std::uint64_t seed, int k_star, int forced,
                          int* natural_out) {
  Panel traj;
  int k = 1;
  while (true) {
    int natural = 0;
    const bool is_star = (k == k_star);
    const bool more = simulate_job(spec, seed, traj, k, is_star ? forced : -1, &natural);
    if (is_star && natural_out) *natural_out = natural;
    if (!more) break;
    ++k;
  }
  return traj;
}

bool in_bins(const ScenarioSpec& spec, const Panel& world, int k, int lag,
             const std::vector<ConditioningBin>& bins) {
  for (const auto& bin : bins) {
    const double v = evaluate_term(bin.term, spec.column_names, world, k, lag);
    if (v < bin.lo || v > bin.hi) return false;
  }
  return true;
}

}  // namespace

Panel simulate_panel(const ScenarioSpec& spec, std::uint64_t seed) {
  return simulate_trajectory(spec, seed, -1, -1, nullptr);
}

PanelSet simulate_panels(const ScenarioSpec& spec, int n_panels, std::uint64_t seed) {
  PanelSet out;
  out.column_names = spec.column_names;
  out.panels.resize(n_panels);
  for (int i = 0; i < n_panels; ++i) {
    const std::uint64_t s =
        rng::counter_hash(seed, static_cast<std::uint64_t>(Slot::Panel), i);
    out.panels[i] = simulate_panel(spec, s);
    out.panels[i].id = "p" + std::to_string(i + 1);
  }
  return out;
}

std::optional<WorldPair> try_simulate_world_pair(const ScenarioSpec& spec, int k_star,
                                                 std::uint64_t seed) {
  WorldPair pair;
  pair.k_star = k_star;
  pair.shared_seed = seed;
  int natural1 = -1, natural0 = -1;
  pair.world_1 = simulate_trajectory(spec, seed, k_star, 1, &natural1);
  pair.world_0 = simulate_trajectory(spec, seed, k_star, 0, &natural0);
  if (pair.world_1.size() < k_star || pair.world_0.size() < k_star) return std::nullopt;
  pair.natural_a = natural1;  // prefixes coincide, so natural0 == natural1
  return pair;
}

WorldPair simulate_world_pair(const ScenarioSpec& spec, int k_star, std::uint64_t seed) {
  if (k_star < 1) throw Error(errc::invalid_config, "k_star must be >= 1");
  auto pair = try_simulate_world_pair(spec, k_star, seed);
  if (!pair) {
    throw Error(errc::k_star_never_reached,
                "neither world produced job " + std::to_string(k_star));
  }
  return *pair;
}

OracleEstimate oracle_lag_effect(const ScenarioSpec& spec, int k, int lag,
                                 const std::vector<ConditioningBin>& bins,
                                 long long replicates, std::uint64_t seed, int threads) {
  if (replicates < 1) throw Error(errc::invalid_config, "replicates must be >= 1");
  struct RepResult {
    double y1 = 0.0, y0 = 0.0;
    bool in1 = false, in0 = false;
  };
  std::vector<RepResult> results(static_cast<size_t>(replicates));
  parallel_for(replicates, threads, [&](long long i) {
    const std::uint64_t s = rng::counter_hash(seed, static_cast<std::uint64_t>(Slot::Pair), i);
    auto pair = try_simulate_world_pair(spec, k, s);
    if (!pair) return;
    RepResult r;
    if (pair->world_1.size() >= k + lag && in_bins(spec, pair->world_1, k, lag, bins)) {
      r.in1 = true;
      r.y1 = pair->world_1.jobs[k + lag - 1].y;
    }
    if (pair->world_0.size() >= k + lag && in_bins(spec, pair->world_0, k, lag, bins)) {
      r.in0 = true;
      r.y0 = pair->world_0.jobs[k + lag - 1].y;
    }
    results[static_cast<size_t>(i)] = r;
  });

  MeanVar arm1, arm0;
  for (const auto& r : results) {
    if (r.in1) arm1.add(r.y1);
    if (r.in0) arm0.add(r.y0);
  }
  if (arm1.n == 0 || arm0.n == 0) {
    throw Error(errc::empty_conditioning_cell,
                "conditioning left an empty arm (n1=" + std::to_string(arm1.n) +
                    ", n0=" + std::to_string(arm0.n) + ")");
  }
  OracleEstimate est;
  est.value = arm1.mean - arm0.mean;
  est.mc_se = std::sqrt(arm1.variance() / static_cast<double>(arm1.n) +
                        arm0.variance() / static_cast<double>(arm0.n));
  est.n_effective = std::min(arm1.n, arm0.n);
  return est;
}

IdentificationReport check_identification(const ScenarioSpec& spec, int k, int lag,
                                          const std::vector<ConditioningBin>& bins,
                                          long long replicates, std::uint64_t seed,
                                          int threads) {
  IdentificationReport report;
  report.counterfactual = oracle_lag_effect(spec, k, lag, bins, replicates, seed, threads);

  struct RepResult {
    double y = 0.0;
    int a = -1;  // -1: excluded
  };
  std::vector<RepResult> results(static_cast<size_t>(replicates));
  parallel_for(replicates, threads, [&](long long i) {
    const std::uint64_t s =
        rng::counter_hash(seed, static_cast<std::uint64_t>(Slot::Panel), i);
    Panel panel = simulate_panel(spec, s);
    if (panel.size() < k + lag) return;
    if (!in_bins(spec, panel, k, lag, bins)) return;
    results[static_cast<size_t>(i)] = {panel.jobs[k + lag - 1].y, panel.jobs[k - 1].a};
  });
  MeanVar treated, control;
  for (const auto& r : results) {
    if (r.a == 1) treated.add(r.y);
    if (r.a == 0) control.add(r.y);
  }
  if (treated.n == 0 || control.n == 0) {
    throw Error(errc::empty_conditioning_cell,
                "observational contrast undefined (n1=" + std::to_string(treated.n) +
                    ", n0=" + std::to_string(control.n) + ")");
  }
  report.n_treated = treated.n;
  report.n_control = control.n;
  report.observational = treated.mean - control.mean;
  report.observational_se = std::sqrt(treated.variance() / static_cast<double>(treated.n) +
                                      control.variance() / static_cast<double>(control.n));
  report.difference = report.counterfactual.value - report.observational;
  report.joint_se = std::sqrt(report.counterfactual.mc_se * report.counterfactual.mc_se +
                              report.observational_se * report.observational_se);
  report.z = report.joint_se > 0.0 ? std::abs(report.difference) / report.joint_se : 0.0;
  return report;
}

}  // namespace lageffect
