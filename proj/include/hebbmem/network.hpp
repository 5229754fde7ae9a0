#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "hebbmem/patterns.hpp"
#include "hebbmem/plasticity.hpp"

namespace hebbmem {

/// How a modular network visits its hypercolumns during recall. kWTA is a
/// global selection and always updates synchronously.
enum class UpdateOrder {
  sequential,   // hypercolumns 0..H-1 in turn, each seeing the latest state
  synchronous,  // every hypercolumn from the previous state
};

struct NetworkConfig {
  Layout layout;
  Rule rule = Rule::BCPNN;
  int max_iterations = 10;
  bool zero_diagonal = false;
  UpdateOrder update_order = UpdateOrder::sequential;
};

struct RecallResult {
  Pattern final_state;
  int iterations_used = 0;
  bool converged = false;
};

/// h_j = b_j + sum_i activity_i * w_ij
inline std::vector<double> field(const WeightState& ws, const Pattern& activity) {
  const std::size_t n = ws.size();
  if (activity.size() != n) throw std::invalid_argument("activity size does not match weights");
  std::vector<double> h(ws.b);
  for (std::size_t i = 0; i < n; ++i) {
    if (!activity.bits[i]) continue;
    const auto row = ws.w.row(i);
    for (std::size_t j = 0; j < n; ++j) h[j] += row[j];
  }
  return h;
}

/// Local winner-take-all: the largest field in each block wins, ties to the
/// lowest index.
inline Pattern activate_modular(std::span<const double> h, const Layout& layout) {
  if (h.size() != layout.N()) throw std::invalid_argument("field size does not match layout");
  Pattern p(layout);
  for (std::uint32_t blk = 0; blk < layout.H; ++blk) {
    const std::size_t base = std::size_t{blk} * layout.M;
    std::size_t best = base;
    for (std::size_t u = base + 1; u < base + layout.M; ++u)
      if (h[u] > h[best]) best = u;
    p.bits[best] = 1;
  }
  return p;
}

/// k-winners-take-all over the whole network; boundary ties go to the lowest index.
inline Pattern activate_kwta(std::span<const double> h, const Layout& layout) {
  const std::size_t n = layout.N();
  const std::size_t k = layout.K();
  if (h.size() != n) throw std::invalid_argument("field size does not match layout");
  if (k > n) throw std::invalid_argument("K exceeds N");
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  const auto before = [&](std::uint32_t x, std::uint32_t y) {
    return h[x] > h[y] || (h[x] == h[y] && x < y);
  };
  if (k < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                              order.end(), before);
  Pattern p(layout);
  for (std::size_t r = 0; r < k; ++r) p.bits[order[r]] = 1;
  return p;
}

inline Pattern activate(std::span<const double> h, const Layout& layout) {
  return layout.is_modular() ? activate_modular(h, layout) : activate_kwta(h, layout);
}

/// One synchronous update of every unit.
inline Pattern update(const WeightState& ws, const Pattern& state, const Layout& layout) {
  return activate(field(ws, state), layout);
}

namespace detail {

// One in-place sweep over the hypercolumns; `h` is kept equal to field(ws, state).
inline bool sequential_sweep(const WeightState& ws, Pattern& state, std::vector<double>& h,
                             const Layout& layout) {
  bool changed = false;
  const std::size_t n = layout.N();
  for (std::uint32_t blk = 0; blk < layout.H; ++blk) {
    const std::size_t base = std::size_t{blk} * layout.M;
    std::size_t best = base, cur = base;
    for (std::size_t u = base; u < base + layout.M; ++u) {
      if (h[u] > h[best]) best = u;
      if (state.bits[u]) cur = u;
    }
    if (best == cur) continue;
    changed = true;
    state.bits[cur] = 0;
    state.bits[best] = 1;
    const auto on = ws.w.row(best);
    const auto off = ws.w.row(cur);
    for (std::size_t j = 0; j < n; ++j) h[j] += on[j] - off[j];
  }
  return changed;
}

}  // namespace detail

/// Iterates from the cue until an iteration leaves the state unchanged or the
/// cap is reached. The cue is not clamped. One iteration is a full sweep over
/// the hypercolumns (sequential) or one global update (synchronous / kWTA).
inline RecallResult recall(const WeightState& ws, const Pattern& cue, const NetworkConfig& cfg) {
  if (cfg.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (cue.size() != cfg.layout.N()) throw std::invalid_argument("cue size does not match layout");
  Pattern state = cue;
  state.layout = cfg.layout;
  RecallResult res;

  if (cfg.layout.is_modular() && cfg.update_order == UpdateOrder::sequential) {
    if (!state.one_per_block()) throw std::invalid_argument("cue must have one active unit per block");
    auto h = field(ws, state);
    for (int t = 1; t <= cfg.max_iterations; ++t) {
      res.iterations_used = t;
      if (!detail::sequential_sweep(ws, state, h, cfg.layout)) {
        res.converged = true;
        break;
      }
    }
    res.final_state = std::move(state);
    return res;
  }

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    Pattern next = update(ws, state, cfg.layout);
    res.iterations_used = t;
    if (next == state) {
      res.converged = true;
      break;
    }
    state = std::move(next);
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace hebbmem
