#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hebbmem/analysis.hpp"
#include "hebbmem/network.hpp"
#include "hebbmem/patterns.hpp"
#include "hebbmem/plasticity.hpp"
#include "hebbmem/rng.hpp"

namespace hebbmem {

struct TrialSpec {
  NetworkConfig cfg;
  PatternSpec pattern_spec;
  /// Fraction of eligible hypercolumns (active units for K-of-N kinds)
  /// resampled in each test cue.
  double distort = 0.10;
  double recall_threshold = 90.0;
  int repeats_per_point = 1;
};

struct BisectionParams {
  long P0 = 100;
  long d0 = 0;  // 0: round(0.1 * P0)
  double shrink = 0.5;
  int window = 20;
  double balance_tol = 0.1;
  int max_sim_calls = 500;

  void validate() const {
    if (P0 < 1) throw std::invalid_argument("P0 must be >= 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (max_sim_calls < 1) throw std::invalid_argument("max_sim_calls must be >= 1");
  }
};

struct BisectionResult {
  long P = 0;
  int sim_calls = 0;
  std::vector<long> trajectory;  // P at each call
};

class NonConvergenceError : public std::runtime_error {
 public:
  explicit NonConvergenceError(std::vector<long> traj)
      : std::runtime_error("bisection did not balance within the call budget"),
        trajectory(std::move(traj)) {}
  std::vector<long> trajectory;
};

struct CapacityEstimate {
  std::vector<long> per_run_P;
  std::vector<int> sim_calls;
  double mean = 0.0;
  double std = 0.0;
};

inline CapacityEstimate summarize(std::span<const BisectionResult> runs) {
  CapacityEstimate est;
  for (const auto& r : runs) {
    est.per_run_P.push_back(r.P);
    est.sim_calls.push_back(r.sim_calls);
  }
  if (runs.empty()) return est;
  const double n = static_cast<double>(runs.size());
  est.mean = std::accumulate(est.per_run_P.begin(), est.per_run_P.end(), 0.0) / n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (auto p : est.per_run_P) ss += (p - est.mean) * (p - est.mean);
    est.std = std::sqrt(ss / (n - 1.0));
  }
  return est;
}

/// Stochastic bisection for the pattern count where recall crosses the
/// threshold. `corr_percent(P, call_index)` returns the recall percentage of a
/// fresh simulation with P patterns. The step shrinks on every direction
/// reversal; once it reaches 1 the last `window` directions are kept and the
/// loop stops when they balance. P never drops below 0; a zero-pattern network
/// counts as perfect recall without calling the oracle.
template <class Oracle>
BisectionResult bisect(Oracle&& corr_percent, const BisectionParams& params,
                       double threshold = 90.0) {
  params.validate();
  BisectionResult res;
  long P = params.P0;
  long d = params.d0 > 0 ? params.d0 : std::max(1L, std::lround(0.1 * static_cast<double>(params.P0)));
  int dir = 0;
  std::deque<int> dirs;
  const auto balanced = [&] {
    if (static_cast<int>(dirs.size()) < params.window) return false;
    const double mean = std::accumulate(dirs.begin(), dirs.end(), 0.0) / static_cast<double>(dirs.size());
    return std::abs(mean) <= params.balance_tol;
  };
  while (!balanced()) {
    if (res.sim_calls >= params.max_sim_calls) throw NonConvergenceError(std::move(res.trajectory));
    res.trajectory.push_back(P);
    const double corr = P == 0 ? 100.0 : corr_percent(P, static_cast<std::uint64_t>(res.sim_calls));
    ++res.sim_calls;
    const int dirold = dir;
    dir = corr > threshold ? 1 : (corr < threshold ? -1 : 0);
    P = std::max(0L, P + dir * d);
    if (d > 1 && dir * dirold < 0) {
      d = static_cast<long>(std::max(1.0, params.shrink * static_cast<double>(d) + 0.5));
    } else if (d == 1) {
      dirs.push_back(dir);
      if (static_cast<int>(dirs.size()) > params.window) dirs.pop_front();
    }
  }
  res.P = P;
  return res;
}

/// Resample count for one cue: the configured fraction of its eligible blocks.
inline double resample_count(const Pattern& p, const TrialSpec& spec) {
  return spec.distort * static_cast<double>(eligible_count(p, spec.pattern_spec.kind));
}

/// Fraction of stored patterns recalled exactly from a distorted cue.
inline double recall_fraction(const WeightState& ws, std::span<const Pattern> stored,
                              const TrialSpec& spec, Rng& rng) {
  if (stored.empty()) throw std::invalid_argument("no stored patterns to test");
  std::size_t hits = 0, probes = 0;
  for (int rep = 0; rep < std::max(1, spec.repeats_per_point); ++rep) {
    for (const auto& p : stored) {
      const Pattern cue = distort(p, resample_count(p, spec), rng, spec.pattern_spec);
      const auto res = recall(ws, cue, spec.cfg);
      if (res.final_state == p) ++hits;
      ++probes;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(probes);
}

/// Fresh pattern set and fresh network with P patterns; returns percent recalled.
inline double simulate_point(const TrialSpec& spec, long P, Rng& rng) {
  if (P < 1) throw std::invalid_argument("simulate_point needs P >= 1");
  const Layout& layout = spec.cfg.layout;
  PatternSpec ps = spec.pattern_spec;
  const auto stored = generate_set(layout, ps, static_cast<std::size_t>(P), rng);
  const auto state = train(stored, layout.N());
  const auto ws = compute_weights(state, spec.cfg.rule, layout, spec.cfg.zero_diagonal);
  TrialSpec local = spec;
  local.pattern_spec = std::move(ps);
  return 100.0 * recall_fraction(ws, stored, local, rng);
}

/// Starting point for the search: the scaling-law prediction with the rule's
/// reference bits per weight.
inline long default_P0(const Layout& layout, Rule rule) {
  return std::max(1L, std::lround(capacity_model(layout, bits_per_weight_prior(rule, layout.arch))));
}

inline BisectionResult bisect_P90(const TrialSpec& spec, const BisectionParams& params,
                                  const RngStream& stream) {
  return bisect(
      [&](long P, std::uint64_t call) {
        Rng rng(stream.child(call));
        return simulate_point(spec, P, rng);
      },
      params, spec.recall_threshold);
}

inline CapacityEstimate capacity_estimate(const TrialSpec& spec, const BisectionParams& params,
                                          int runs, const RngStream& stream) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<BisectionResult> results;
  for (int r = 0; r < runs; ++r)
    results.push_back(bisect_P90(spec, params, stream.child(static_cast<std::uint64_t>(r))));
  return summarize(results);
}

}  // namespace hebbmem
