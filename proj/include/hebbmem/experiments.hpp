#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "hebbmem/analysis.hpp"
#include "hebbmem/evaluation.hpp"
#include "hebbmem/network.hpp"
#include "hebbmem/patterns.hpp"
#include "hebbmem/plasticity.hpp"
#include "hebbmem/rng.hpp"

namespace hebbmem {

// --- seeding ----------------------------------------------------------------

/// Coordinates of one unit of work. The stream derived from it depends only on
/// these fields, never on scheduling.
struct CellKey {
  std::string verb;
  Rule rule = Rule::BCPNN;
  Architecture arch = Architecture::modular;
  PatternKind kind = PatternKind::hrand;
  std::uint32_t H = 0;
  std::uint32_t M = 0;
  int run = 0;
  std::string role;  // sub-coordinate, e.g. a sweep level

  [[nodiscard]] std::string canonical() const {
    std::string s = verb;
    for (std::string_view part : {to_string(rule), to_string(arch), to_string(kind)}) {
      s += '|';
      s += part;
    }
    s += '|' + std::to_string(H) + '|' + std::to_string(M) + '|' + std::to_string(run) + '|' + role;
    return s;
  }
};

inline RngStream seed_derivation(std::uint64_t master_seed, const CellKey& key) {
  return {master_seed, fnv1a64(key.canonical())};
}

// --- formatting ---------------------------------------------------------------

/// Shortest decimal that round-trips; '.' radix regardless of locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

// --- parallel execution -----------------------------------------------------

/// Runs fn(0..n-1) on a bounded pool. Each index must write only its own slot.
template <class Fn>
void run_tasks(std::size_t n, int workers, Fn&& fn) {
  const auto pool = static_cast<std::size_t>(std::max(1, workers));
  if (pool == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(pool, n); ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// --- capacity rows ------------------------------------------------------------

struct CapacityRow {
  Rule rule = Rule::BCPNN;
  Architecture arch = Architecture::modular;
  PatternKind kind = PatternKind::hrand;
  std::uint32_t H = 0, M = 0;
  double distort = 0.0;
  double silent_frac = 0.0;
  double f_p = 0.0;
  std::string run;  // run index, or "mean" / "std" for aggregate rows
  std::optional<double> P90;  // empty: failed cell
  long sim_calls = 0;
  std::uint64_t seed = 0;
  std::optional<double> I_w;  // distortion sweeps only
  bool reference = false;     // distortion sweeps only
};

inline const char* kCapacityHeader =
    "rule,arch,kind,H,M,N,K,distort,silent_frac,f_p,run,P90,sim_calls,seed";

inline void write_capacity_csv(std::ostream& os, const std::vector<CapacityRow>& rows,
                               const std::string& comment, bool sweep_columns = false) {
  if (!comment.empty()) os << "# " << comment << '\n';
  os << kCapacityHeader << (sweep_columns ? ",I_w,ref" : "") << '\n';
  for (const auto& r : rows) {
    const std::uint64_t n = std::uint64_t{r.H} * r.M;
    os << to_string(r.rule) << ',' << to_string(r.arch) << ',' << to_string(r.kind) << ',' << r.H
       << ',' << r.M << ',' << n << ',' << r.H << ',' << format_number(r.distort) << ','
       << format_number(r.silent_frac) << ',' << format_number(r.f_p) << ',' << r.run << ','
       << (r.P90 ? format_number(*r.P90) : std::string("ERROR")) << ',' << r.sim_calls << ','
       << r.seed;
    if (sweep_columns)
      os << ',' << (r.I_w ? format_number(*r.I_w) : std::string()) << ',' << (r.reference ? 1 : 0);
    os << '\n';
  }
}

// --- sweeps -------------------------------------------------------------------

/// Replaces simulate_point in a sweep; used to drive the harness with a known
/// answer.
using SimulateOracle = std::function<double(const CellKey&, long P, Rng&)>;

struct SweepSpec {
  std::vector<Rule> rules{Rule::BCPNN};
  std::vector<Architecture> architectures{Architecture::modular};
  std::vector<PatternKind> kinds{PatternKind::hrand};
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sizes{{16, 16}};
  double distortion = 0.10;
  double silent_fraction = 0.25;
  double f_p = 0.10;
  int runs = 5;
  std::uint64_t master_seed = 0;
  int workers = 1;
  int max_iterations = 10;
  bool zero_diagonal = false;
  UpdateOrder update_order = UpdateOrder::sequential;
  double threshold = 90.0;
  BisectionParams bisection{.P0 = 0};  // P0 <= 0 selects the scaling-law default
  std::string verb = "capacity";
};

/// K-of-N kinds run on the non-modular network, block kinds other than
/// silent on the modular one; silent runs on both.
inline bool cell_is_native(Architecture arch, PatternKind kind) {
  if (kind == PatternKind::silent) return true;
  return is_unstructured(kind) == (arch == Architecture::non_modular);
}

struct Cell {
  CellKey key;
  TrialSpec trial;
  BisectionParams params;
};

inline std::vector<Cell> expand_cells(const SweepSpec& spec) {
  if (spec.rules.empty() || spec.architectures.empty() || spec.kinds.empty() || spec.sizes.empty())
    throw std::invalid_argument("sweep selections must be non-empty");
  if (spec.runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<Cell> cells;
  for (auto rule : spec.rules)
    for (auto arch : spec.architectures)
      for (auto kind : spec.kinds)
        for (auto [H, M] : spec.sizes) {
          if (!cell_is_native(arch, kind)) continue;
          Cell c;
          c.key = {spec.verb, rule, arch, kind, H, M, 0, "bisect"};
          c.trial.cfg = {Layout(arch, H, M), rule, spec.max_iterations, spec.zero_diagonal,
                         spec.update_order};
          c.trial.pattern_spec.kind = kind;
          c.trial.pattern_spec.silent_fraction = spec.silent_fraction;
          c.trial.pattern_spec.f_p = spec.f_p;
          c.trial.distort = spec.distortion;
          c.trial.recall_threshold = spec.threshold;
          c.params = spec.bisection;
          if (c.params.P0 <= 0) c.params.P0 = default_P0(c.trial.cfg.layout, rule);
          cells.push_back(std::move(c));
        }
  return cells;
}

namespace detail {

inline CapacityRow row_for(const Cell& c, std::uint64_t seed) {
  CapacityRow r;
  r.rule = c.key.rule;
  r.arch = c.key.arch;
  r.kind = c.key.kind;
  r.H = c.key.H;
  r.M = c.key.M;
  r.distort = c.trial.distort;
  r.silent_frac = c.key.kind == PatternKind::silent ? c.trial.pattern_spec.silent_fraction : 0.0;
  r.f_p = is_correlated(c.key.kind) ? c.trial.pattern_spec.f_p : 0.0;
  r.seed = seed;
  return r;
}

}  // namespace detail

/// Runs `runs` bisections per cell with `simulate(cell, P, rng)` as the oracle
/// and returns per-run rows followed by "mean" and "std" rows for each cell.
/// A run that fails is recorded with an ERROR marker.
template <class Simulate>
std::vector<CapacityRow> run_capacity_cells(const std::vector<Cell>& cells, int runs,
                                            std::uint64_t master_seed, int workers,
                                            Simulate&& simulate) {
  const std::size_t n_tasks = cells.size() * static_cast<std::size_t>(runs);
  std::vector<CapacityRow> run_rows(n_tasks);
  std::vector<std::optional<BisectionResult>> results(n_tasks);
  run_tasks(n_tasks, workers, [&](std::size_t t) {
    const Cell& cell = cells[t / runs];
    CellKey key = cell.key;
    key.run = static_cast<int>(t % runs);
    const RngStream stream = seed_derivation(master_seed, key);
    CapacityRow row = detail::row_for(cell, master_seed);
    row.run = std::to_string(key.run);
    try {
      auto res = bisect(
          [&](long P, std::uint64_t call) {
            Rng rng(stream.child(call));
            return simulate(cell, key, P, rng);
          },
          cell.params, cell.trial.recall_threshold);
      row.P90 = static_cast<double>(res.P);
      row.sim_calls = res.sim_calls;
      results[t] = std::move(res);
    } catch (const NonConvergenceError& e) {
      row.sim_calls = static_cast<long>(e.trajectory.size());
    } catch (const std::exception&) {
      row.sim_calls = 0;
    }
    run_rows[t] = std::move(row);
  });

  std::vector<CapacityRow> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<BisectionResult> ok;
    long calls = 0;
    for (int r = 0; r < runs; ++r) {
      const std::size_t t = c * runs + r;
      out.push_back(run_rows[t]);
      calls += run_rows[t].sim_calls;
      if (results[t]) ok.push_back(*results[t]);
    }
    const auto est = summarize(ok);
    CapacityRow mean = detail::row_for(cells[c], master_seed);
    mean.run = "mean";
    mean.sim_calls = calls;
    CapacityRow sd = mean;
    sd.run = "std";
    if (!ok.empty()) {
      mean.P90 = est.mean;
      sd.P90 = est.std;
    }
    out.push_back(std::move(mean));
    out.push_back(std::move(sd));
  }
  return out;
}

/// Storage capacity P90 for every native (rule, architecture, kind, size) cell.
inline std::vector<CapacityRow> storage_scaling(const SweepSpec& spec,
                                                const SimulateOracle& oracle = {}) {
  const auto cells = expand_cells(spec);
  return run_capacity_cells(cells, spec.runs, spec.master_seed, spec.workers,
                            [&](const Cell& cell, const CellKey& key, long P, Rng& rng) {
                              return oracle ? oracle(key, P, rng)
                                            : simulate_point(cell.trial, P, rng);
                            });
}

// --- prototype extraction -------------------------------------------------------

struct PrototypeSpec {
  long Q = 10;
  int ninst = 10;
  double train_resample = 0.10;  // fraction of eligible blocks per training instance
  double test_resample = 0.10;   // fraction of eligible blocks per probe
  NetworkConfig cfg;
  PatternSpec pattern_spec;
  double threshold = 90.0;

  void validate() const {
    if (Q < 1) throw std::invalid_argument("Q must be >= 1");
    if (ninst < 1) throw std::invalid_argument("ninst must be >= 1");
  }
};

struct PrototypeOutcome {
  double fraction = 0.0;         // probes that recalled their prototype exactly
  std::size_t instance_recalls = 0;  // probes that settled on one of their training instances instead
};

/// Trains on ninst distorted instances of each of Q fresh prototypes (shuffled)
/// and probes with one unseen instance per prototype.
inline PrototypeOutcome prototype_trial(const PrototypeSpec& spec, Rng& rng) {
  spec.validate();
  const Layout& layout = spec.cfg.layout;
  PatternSpec ps = spec.pattern_spec;
  const auto prototypes = generate_set(layout, ps, static_cast<std::size_t>(spec.Q), rng);

  std::vector<Pattern> instances;
  instances.reserve(prototypes.size() * static_cast<std::size_t>(spec.ninst));
  for (const auto& proto : prototypes) {
    const double n = spec.train_resample * static_cast<double>(eligible_count(proto, ps.kind));
    for (int k = 0; k < spec.ninst; ++k) instances.push_back(distort(proto, n, rng, ps));
  }
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(rng.stream().child(0x53485546ULL));
  shuffle_rng.shuffle(order.begin(), order.end());

  SynapticState state(layout.N());
  for (auto i : order) train_pattern(state, instances[i]);
  const auto ws = compute_weights(state, spec.cfg.rule, layout, spec.cfg.zero_diagonal);

  PrototypeOutcome out;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < prototypes.size(); ++q) {
    const auto& proto = prototypes[q];
    const double n = spec.test_resample * static_cast<double>(eligible_count(proto, ps.kind));
    const auto res = recall(ws, distort(proto, n, rng, ps), spec.cfg);
    if (res.final_state == proto) {
      ++hits;
      continue;
    }
    const auto first = instances.begin() + static_cast<std::ptrdiff_t>(q * spec.ninst);
    if (std::find(first, first + spec.ninst, res.final_state) != first + spec.ninst)
      ++out.instance_recalls;
  }
  out.fraction = static_cast<double>(hits) / static_cast<double>(prototypes.size());
  return out;
}

/// Bisection over the prototype count Q with prototype_trial as the oracle.
inline CapacityEstimate prototype_capacity(const PrototypeSpec& spec, const BisectionParams& params,
                                           int runs, const RngStream& stream) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<BisectionResult> results;
  for (int r = 0; r < runs; ++r) {
    const RngStream run_stream = stream.child(static_cast<std::uint64_t>(r));
    results.push_back(bisect(
        [&](long Q, std::uint64_t call) {
          PrototypeSpec s = spec;
          s.Q = Q;
          Rng rng(run_stream.child(call));
          return 100.0 * prototype_trial(s, rng).fraction;
        },
        params, spec.threshold));
  }
  return summarize(results);
}

/// Prototype-capacity version of storage_scaling. Training and probe distortion
/// both use spec.distortion unless train_resample is given.
inline std::vector<CapacityRow> prototype_scaling(const SweepSpec& spec, int ninst,
                                                  std::optional<double> train_resample = {},
                                                  const SimulateOracle& oracle = {}) {
  SweepSpec s = spec;
  if (s.verb == "capacity") s.verb = "prototype";
  const auto cells = expand_cells(s);
  return run_capacity_cells(cells, s.runs, s.master_seed, s.workers,
                            [&](const Cell& cell, const CellKey& key, long Q, Rng& rng) {
                              if (oracle) return oracle(key, Q, rng);
                              PrototypeSpec ps;
                              ps.Q = Q;
                              ps.ninst = ninst;
                              ps.train_resample = train_resample.value_or(cell.trial.distort);
                              ps.test_resample = cell.trial.distort;
                              ps.cfg = cell.trial.cfg;
                              ps.pattern_spec = cell.trial.pattern_spec;
                              ps.threshold = cell.trial.recall_threshold;
                              return 100.0 * prototype_trial(ps, rng).fraction;
                            });
}

// --- distortion and silent-fraction sweeps ---------------------------------

inline constexpr double kReferenceDistortion = 0.10;

/// Capacity per (size, distortion level) for one rule, with the bits-per-weight
/// fit across sizes at each level attached to that level's rows.
inline std::vector<CapacityRow> distortion_sweep(SweepSpec base, const std::vector<double>& levels,
                                                 const SimulateOracle& oracle = {}) {
  if (levels.empty()) throw std::invalid_argument("no distortion levels");
  for (double l : levels)
    if (!(l > 0.0)) throw std::invalid_argument("distortion levels must be positive");
  base.verb = "sweep-distort";
  std::vector<Cell> cells;
  for (double level : levels) {
    SweepSpec s = base;
    s.distortion = level;
    for (auto& c : expand_cells(s)) {
      c.key.role = "d=" + format_number(level);
      cells.push_back(std::move(c));
    }
  }
  auto rows = run_capacity_cells(cells, base.runs, base.master_seed, base.workers,
                                 [&](const Cell& cell, const CellKey& key, long P, Rng& rng) {
                                   return oracle ? oracle(key, P, rng)
                                                 : simulate_point(cell.trial, P, rng);
                                 });
  // Fit on the per-cell means, grouped by (rule, arch, kind, level).
  using Group = std::tuple<Rule, Architecture, PatternKind, double>;
  std::map<Group, std::vector<CapacityPoint>> groups;
  for (const auto& r : rows)
    if (r.run == "mean" && r.P90 && *r.P90 > 0.0)
      groups[{r.rule, r.arch, r.kind, r.distort}].push_back({Layout(r.arch, r.H, r.M), *r.P90});
  for (auto& r : rows) {
    r.reference = std::abs(r.distort - kReferenceDistortion) < 1e-12;
    auto it = groups.find({r.rule, r.arch, r.kind, r.distort});
    if (it != groups.end() && !it->second.empty()) r.I_w = fit_bits_per_weight(it->second).I_w;
  }
  return rows;
}

/// Capacity per (rule, silent fraction) with silent patterns; distortion is a
/// fraction of each pattern's active (non-silent) hypercolumns.
inline std::vector<CapacityRow> silent_sweep(SweepSpec base, const std::vector<double>& fractions,
                                             const SimulateOracle& oracle = {}) {
  if (fractions.empty()) throw std::invalid_argument("no silent fractions");
  for (double f : fractions)
    if (!(f >= 0.0 && f < 1.0)) throw std::invalid_argument("silent fractions must lie in [0, 1)");
  base.verb = "sweep-silent";
  base.kinds = {PatternKind::silent};
  std::vector<Cell> cells;
  for (double f : fractions) {
    SweepSpec s = base;
    s.silent_fraction = f;
    for (auto& c : expand_cells(s)) {
      c.key.role = "s=" + format_number(f);
      cells.push_back(std::move(c));
    }
  }
  return run_capacity_cells(cells, base.runs, base.master_seed, base.workers,
                            [&](const Cell& cell, const CellKey& key, long P, Rng& rng) {
                              return oracle ? oracle(key, P, rng)
                                            : simulate_point(cell.trial, P, rng);
                            });
}

// --- weight trajectories -------------------------------------------------------

struct TrajectoryRow {
  std::size_t step = 0;
  std::size_t pre = 0;
  std::size_t post = 0;
  double value = 0.0;
};

/// `count` synapses spaced uniformly over the row-major N x N index range.
inline std::vector<std::pair<std::size_t, std::size_t>> default_watch_pairs(std::size_t n,
                                                                             std::size_t count = 40) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t total = n * n;
  count = std::min(count, total);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = k * total / count;
    out.emplace_back(idx / n, idx % n);
  }
  return out;
}

/// Watched weights after each training pattern (steps count from 1).
inline std::vector<TrajectoryRow> weight_trajectories(
    const NetworkConfig& cfg, const std::vector<Pattern>& training,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const std::size_t n = cfg.layout.N();
  for (auto [i, j] : pairs)
    if (i >= n || j >= n) throw std::invalid_argument("watched pair outside the network");
  SynapticState state(n);
  std::vector<TrajectoryRow> rows;
  rows.reserve(training.size() * pairs.size());
  for (std::size_t step = 0; step < training.size(); ++step) {
    train_pattern(state, training[step]);
    for (auto [i, j] : pairs) {
      double v = weight_at(state, cfg.rule, cfg.layout, i, j);
      if (cfg.zero_diagonal && i == j) v = 0.0;
      rows.push_back({step + 1, i, j, v});
    }
  }
  return rows;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows,
                                 const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "step,pre_index,post_index,value\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.pre << ',' << r.post << ',' << format_number(r.value) << '\n';
}

}  // namespace hebbmem
