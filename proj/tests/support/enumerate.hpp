#pragma once

// Brute-force oracle over the finite exogenous-outcome tree of a discrete
// scenario. Independent of the simulator's sampling loop: it walks every
// joint region of the shared uniform draws for a forced-1/forced-0 world
// pair and accumulates exact per-arm conditional expectations. Only valid
// for scenarios whose context kernels are bernoulli/constant and whose
// outcome noise is none or rademacher.

#include <algorithm>
#include <vector>

#include "lageffect/feature.hpp"
#include "lageffect/numeric.hpp"
#include "lageffect/scenario.hpp"
#include "lageffect/simulate.hpp"

namespace lageffect::testing {

struct ExactLagEffect {
  double value = 0.0;
  double arm1_mean = 0.0;
  double arm0_mean = 0.0;
  double arm1_mass = 0.0;  // P(conditioning event under the forced-1 world)
  double arm0_mass = 0.0;
};

class PairEnumerator {
 public:
  PairEnumerator(const ScenarioSpec& spec, int k_star, int lag,
                 const std::vector<ConditioningBin>& bins)
      : spec_(spec), k_star_(k_star), lag_(lag), bins_(bins) {
    for (const auto& ck : spec.context) {
      if (ck.family != ContextFamily::Bernoulli && ck.family != ContextFamily::Constant) {
        throw Error(errc::invalid_config, "enumerator needs discrete contexts");
      }
    }
    if (spec.outcome.noise != NoiseKind::None && spec.outcome.noise != NoiseKind::Rademacher) {
      throw Error(errc::invalid_config, "enumerator needs discrete outcome noise");
    }
  }

  ExactLagEffect run() {
    Panel w1, w0;
    walk_job(w1, w0, true, true, 1, 1.0);
    ExactLagEffect out;
    out.arm1_mean = sum1_ / mass1_;
    out.arm0_mean = sum0_ / mass0_;
    out.value = out.arm1_mean - out.arm0_mean;
    out.arm1_mass = mass1_;
    out.arm0_mass = mass0_;
    return out;
  }

 private:
  const ScenarioSpec& spec_;
  int k_star_;
  int lag_;
  std::vector<ConditioningBin> bins_;
  double sum1_ = 0.0, mass1_ = 0.0;
  double sum0_ = 0.0, mass0_ = 0.0;

  static double prev(const Panel& t, int k, int what /*0:a 1:y*/) {
    if (k < 2 || t.size() < k - 1) return 0.0;
    return what == 0 ? t.jobs[k - 2].a : t.jobs[k - 2].y;
  }
  double prevx(const Panel& t, int k, int j) const {
    return (k < 2 || t.size() < k - 1) ? 0.0 : t.jobs[k - 2].x[j];
  }

  double context_threshold(const Panel& t, int k, int j) const {
    const auto& kern = spec_.context[j];
    Eigen::VectorXd z(3 + spec_.context_dim);
    z[0] = 1.0;
    z[1] = prev(t, k, 0);
    z[2] = prev(t, k, 1);
    for (int c = 0; c < spec_.context_dim; ++c) z[3 + c] = prevx(t, k, c);
    return kern.family == ContextFamily::Constant ? -1.0 : inv_logit(kern.coef.dot(z));
  }

  double context_constant(const Panel& t, int k, int j) const {
    const auto& kern = spec_.context[j];
    Eigen::VectorXd z(3 + spec_.context_dim);
    z[0] = 1.0;
    z[1] = prev(t, k, 0);
    z[2] = prev(t, k, 1);
    for (int c = 0; c < spec_.context_dim; ++c) z[3 + c] = prevx(t, k, c);
    return kern.coef.dot(z);
  }

  double decision_threshold(const Panel& t, int k, const Eigen::VectorXd& x) const {
    const int d = spec_.context_dim;
    Eigen::VectorXd z(3 + 3 * d);
    int at = 0;
    z[at++] = 1.0;
    for (int j = 0; j < d; ++j) z[at++] = x[j];
    for (int j = 0; j < d; ++j) z[at++] = x[j] * x[j];
    z[at++] = prev(t, k, 0);
    z[at++] = prev(t, k, 1);
    for (int j = 0; j < d; ++j) z[at++] = prevx(t, k, j);
    const double p = inv_logit(spec_.decision.coef.dot(z));
    return std::min(std::max(p, spec_.positivity_floor), 1.0 - spec_.positivity_floor);
  }

  Eigen::VectorXd outcome_z(const Panel& t, int k, const Eigen::VectorXd& x, double a) const {
    const int d = spec_.context_dim;
    Eigen::VectorXd z(4 + 4 * d);
    int at = 0;
    z[at++] = 1.0;
    z[at++] = a;
    for (int j = 0; j < d; ++j) z[at++] = x[j];
    for (int j = 0; j < d; ++j) z[at++] = x[j] * x[j];
    z[at++] = prev(t, k, 0);
    z[at++] = prev(t, k, 1);
    for (int j = 0; j < d; ++j) z[at++] = prevx(t, k, j);
    for (int j = 0; j < d; ++j) z[at++] = prev(t, k, 0) * x[j];
    return z;
  }

  double continue_threshold(const Panel& t, int k) const {
    const int d = spec_.context_dim;
    const Job& job = t.jobs[k - 1];
    Eigen::VectorXd z(3 + d);
    z[0] = 1.0;
    z[1] = job.a;
    z[2] = job.y;
    for (int j = 0; j < d; ++j) z[3 + j] = job.x[j];
    return inv_logit(spec_.continuation.coef.dot(z));
  }

  // Splits [0,1) at the alive worlds' thresholds and recurses per region.
  template <typename Next>
  void branch(bool alive1, bool alive0, double t1, double t0, double mass, Next&& next) {
    std::vector<double> cuts = {0.0, 1.0};
    if (alive1) cuts.push_back(t1);
    if (alive0) cuts.push_back(t0);
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      if (hi <= lo) continue;
      const double mid = 0.5 * (lo + hi);
      next(mid < t1, mid < t0, mass * (hi - lo));
    }
  }

  void walk_job(Panel& w1, Panel& w0, bool alive1, bool alive0, int k, double mass) {
    if (mass <= 0.0) return;
    if (!alive1 && !alive0) {
      finish(w1, w0, mass);
      return;
    }
    Job j1, j0;
    j1.x.resize(spec_.context_dim);
    j0.x.resize(spec_.context_dim);
    walk_context(w1, w0, j1, j0, alive1, alive0, k, 0, mass);
  }

  void walk_context(Panel& w1, Panel& w0, Job& j1, Job& j0, bool alive1, bool alive0, int k,
                    int comp, double mass) {
    if (comp == spec_.context_dim) {
      walk_decision(w1, w0, j1, j0, alive1, alive0, k, mass);
      return;
    }
    if (spec_.context[comp].family == ContextFamily::Constant) {
      if (alive1) j1.x[comp] = context_constant(w1, k, comp);
      if (alive0) j0.x[comp] = context_constant(w0, k, comp);
      walk_context(w1, w0, j1, j0, alive1, alive0, k, comp + 1, mass);
      return;
    }
    const double t1 = alive1 ? context_threshold(w1, k, comp) : 0.0;
    const double t0 = alive0 ? context_threshold(w0, k, comp) : 0.0;
    branch(alive1, alive0, t1, t0, mass, [&](bool hit1, bool hit0, double m) {
      if (alive1) j1.x[comp] = hit1 ? 1.0 : 0.0;
      if (alive0) j0.x[comp] = hit0 ? 1.0 : 0.0;
      walk_context(w1, w0, j1, j0, alive1, alive0, k, comp + 1, m);
    });
  }

  void walk_decision(Panel& w1, Panel& w0, Job& j1, Job& j0, bool alive1, bool alive0, int k,
                     double mass) {
    if (k == k_star_) {
      // Forced arms: the natural draw is consumed but never passed forward,
      // so no branching is needed.
      j1.a = 1;
      j0.a = 0;
      walk_outcome(w1, w0, j1, j0, alive1, alive0, k, mass);
      return;
    }
    const double t1 = alive1 ? decision_threshold(w1, k, j1.x) : 0.0;
    const double t0 = alive0 ? decision_threshold(w0, k, j0.x) : 0.0;
    branch(alive1, alive0, t1, t0, mass, [&](bool hit1, bool hit0, double m) {
      if (alive1) j1.a = hit1 ? 1 : 0;
      if (alive0) j0.a = hit0 ? 1 : 0;
      walk_outcome(w1, w0, j1, j0, alive1, alive0, k, m);
    });
  }

  void walk_outcome(Panel& w1, Panel& w0, Job& j1, Job& j0, bool alive1, bool alive0, int k,
                    double mass) {
    auto set_outcomes = [&](double eps, double m) {
      if (alive1) {
        const Eigen::VectorXd z = outcome_z(w1, k, j1.x, j1.a);
        double sd = spec_.outcome.noise_scale;
        if (spec_.outcome.sd_coef.size() != 0) sd = std::abs(spec_.outcome.sd_coef.dot(z));
        j1.y = spec_.outcome.coef.dot(z) + sd * eps;
      }
      if (alive0) {
        const Eigen::VectorXd z = outcome_z(w0, k, j0.x, j0.a);
        double sd = spec_.outcome.noise_scale;
        if (spec_.outcome.sd_coef.size() != 0) sd = std::abs(spec_.outcome.sd_coef.dot(z));
        j0.y = spec_.outcome.coef.dot(z) + sd * eps;
      }
      walk_continue(w1, w0, j1, j0, alive1, alive0, k, m);
    };
    if (spec_.outcome.noise == NoiseKind::None) {
      set_outcomes(0.0, mass);
    } else {  // rademacher: shared epsilon, u < 0.5 -> -1
      set_outcomes(-1.0, mass * 0.5);
      set_outcomes(+1.0, mass * 0.5);
    }
  }

  void walk_continue(Panel& w1, Panel& w0, Job& j1, Job& j0, bool alive1, bool alive0, int k,
                     double mass) {
    if (alive1) w1.jobs.push_back(j1);
    if (alive0) w0.jobs.push_back(j0);
    const auto undo = [&]() {
      if (alive1) w1.jobs.pop_back();
      if (alive0) w0.jobs.pop_back();
    };
    if (k >= spec_.k_max) {
      finish(w1, w0, mass);
      undo();
      return;
    }
    const double t1 = alive1 ? continue_threshold(w1, k) : 0.0;
    const double t0 = alive0 ? continue_threshold(w0, k) : 0.0;
    branch(alive1, alive0, t1, t0, mass, [&](bool cont1, bool cont0, double m) {
      const bool next1 = alive1 && cont1;
      const bool next0 = alive0 && cont0;
      if (!next1 && !next0) {
        finish(w1, w0, m);
      } else {
        walk_job(w1, w0, next1, next0, k + 1, m);
      }
    });
    undo();
  }

  void finish(const Panel& w1, const Panel& w0, double mass) {
    if (qualifies(w1)) {
      mass1_ += mass;
      sum1_ += mass * w1.jobs[k_star_ + lag_ - 1].y;
    }
    if (qualifies(w0)) {
      mass0_ += mass;
      sum0_ += mass * w0.jobs[k_star_ + lag_ - 1].y;
    }
  }

  bool qualifies(const Panel& world) const {
    if (world.size() < k_star_ + lag_) return false;
    for (const auto& bin : bins_) {
      const double v = evaluate_term(bin.term, spec_.column_names, world, k_star_, lag_);
      if (v < bin.lo || v > bin.hi) return false;
    }
    return true;
  }
};

inline ExactLagEffect exact_lag_effect(const ScenarioSpec& spec, int k, int lag,
                                       const std::vector<ConditioningBin>& bins = {}) {
  return PairEnumerator(spec, k, lag, bins).run();
}

}  // namespace lageffect::testing
