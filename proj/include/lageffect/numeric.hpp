#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace lageffect {

// Counter-based uniform stream: every draw is a pure function of
// (seed, a, b, c), so two trajectories can consult identical exogenous
// noise per variable slot without sharing mutable state.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

// Uniform on the open interval (0,1); never returns 0 or 1.
inline double uniform01(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform01(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                        std::uint64_t c = 0) {
  return uniform01(counter_hash(seed, a, b, c));
}

}  // namespace rng

// Inverse standard normal CDF, Wichura's AS241 (double precision branch).
// Relative error below 1e-15 over (0,1).
double inv_norm_cdf(double p);

// Standard normal CDF.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided normal p-value for a z statistic.
inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Overflow-safe inverse logit clamped away from exactly 0 and 1 so that
// downstream log/ratio arithmetic stays finite.
inline double inv_logit(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    const double p = 1.0 / (1.0 + e);
    return p < 1.0 ? p : 1.0 - 1e-16;
  }
  const double e = std::exp(t);
  const double p = e / (1.0 + e);
  return p > 0.0 ? p : std::numeric_limits<double>::min();
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Compensated accumulator; reductions over a fixed order reproduce
// bit-identically regardless of how the summands were produced.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanVar {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double se_of_mean() const { return n > 0 ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
// must write results into per-index slots so output is independent of the
// thread count.
void parallel_for(long long n, int threads, const std::function<void(long long)>& fn);

// Thread count resolution: explicit > 0 wins, else LAGEFFECT_THREADS, else 1.
int resolve_threads(int requested);

}  // namespace lageffect
