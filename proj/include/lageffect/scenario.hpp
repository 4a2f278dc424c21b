#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "lageffect/error.hpp"

namespace lageffect {

// Kernels are linear / logistic index models over a one-job history window,
// with named sparse coefficients so scenario files stay readable and tiny
// discrete members remain enumerable by brute force.
//
// Regressor registries (d = context dimension):
//   context j:    const, aprev, yprev, xprev1..d
//   decision:     const, x1..d, xsq1..d, aprev, yprev, xprev1..d
//   outcome:      const, a, x1..d, xsq1..d, aprev, yprev, xprev1..d, aprev_x1..d
//   continuation: const, a, y, x1..d
// Previous-job values are zero at k = 1.
enum class NoiseKind { None, Normal, Rademacher, Uniform };

struct LinearKernel {
  Eigen::VectorXd coef;         // dense over the registry
  NoiseKind noise = NoiseKind::None;
  double noise_scale = 0.0;
  Eigen::VectorXd sd_coef;      // optional heteroskedastic sd index; empty = use noise_scale
};

enum class ContextFamily { Bernoulli, Normal, Uniform, Constant };

struct ContextKernel {
  ContextFamily family = ContextFamily::Normal;
  Eigen::VectorXd coef;  // index -> logistic prob (Bernoulli) or location otherwise
  double scale = 1.0;    // sd (Normal) or half-width (Uniform)
};

struct ScenarioSpec {
  std::string label;
  int context_dim = 1;
  std::vector<std::string> column_names;  // x1..xd unless overridden
  int k_max = 50;
  double positivity_floor = 0.01;  // decision probabilities clamped to [delta, 1-delta]

  std::vector<ContextKernel> context;  // one per component
  LinearKernel decision;               // logistic index
  LinearKernel outcome;
  LinearKernel continuation;           // logistic index for P(continue past job k)

  // Registry sizes/name lookups.
  int context_regressor_size() const { return 3 + context_dim; }
  int decision_regressor_size() const { return 3 + 3 * context_dim; }
  int outcome_regressor_size() const { return 4 + 4 * context_dim; }
  int continuation_regressor_size() const { return 3 + context_dim; }
  std::vector<std::string> decision_regressor_names() const;
  std::vector<std::string> outcome_regressor_names() const;
  std::vector<std::string> context_regressor_names() const;
  std::vector<std::string> continuation_regressor_names() const;

  void validate() const;

  // Sectioned key/value document; see scenario files under samples/.
  static ScenarioSpec from_string(const std::string& text);
  static ScenarioSpec from_file(const std::string& path);
  std::string to_string() const;
};

}  // namespace lageffect
