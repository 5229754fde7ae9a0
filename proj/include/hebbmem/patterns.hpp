#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hebbmem/rng.hpp"

namespace hebbmem {

enum class Architecture { modular, non_modular };

inline std::string_view to_string(Architecture a) {
  return a == Architecture::modular ? "modular" : "non-modular";
}

inline Architecture parse_architecture(std::string_view s) {
  if (s == "modular") return Architecture::modular;
  if (s == "non-modular" || s == "nonmodular") return Architecture::non_modular;
  throw std::invalid_argument("unknown architecture: " + std::string(s));
}

/// H hypercolumns of M units each. The non-modular network keeps the same
/// H x M bookkeeping and activates K = H units network-wide.
struct Layout {
  Architecture arch = Architecture::modular;
  std::uint32_t H = 1;
  std::uint32_t M = 1;

  Layout() = default;
  Layout(Architecture a, std::uint32_t h, std::uint32_t m) : arch(a), H(h), M(m) {
    if (h == 0 || m == 0) throw std::invalid_argument("layout needs H >= 1 and M >= 1");
  }

  static Layout modular(std::uint32_t h, std::uint32_t m) { return {Architecture::modular, h, m}; }
  static Layout non_modular(std::uint32_t h, std::uint32_t m) {
    return {Architecture::non_modular, h, m};
  }

  [[nodiscard]] std::size_t N() const noexcept { return std::size_t{H} * M; }
  [[nodiscard]] std::size_t K() const noexcept { return H; }
  [[nodiscard]] bool is_modular() const noexcept { return arch == Architecture::modular; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

/// Binary activity vector of length N.
struct Pattern {
  std::vector<std::uint8_t> bits;
  Layout layout;

  Pattern() = default;
  explicit Pattern(const Layout& l) : bits(l.N(), 0), layout(l) {}

  [[nodiscard]] std::size_t size() const noexcept { return bits.size(); }

  [[nodiscard]] std::vector<std::uint32_t> active_units() const {
    std::vector<std::uint32_t> out;
    out.reserve(layout.K());
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) out.push_back(static_cast<std::uint32_t>(i));
    return out;
  }

  [[nodiscard]] std::size_t active_count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }

  /// Index within block `h` of its active unit, or M if the block has none.
  [[nodiscard]] std::uint32_t block_winner(std::uint32_t h) const {
    const std::size_t base = std::size_t{h} * layout.M;
    for (std::uint32_t u = 0; u < layout.M; ++u)
      if (bits[base + u]) return u;
    return layout.M;
  }

  [[nodiscard]] bool is_silent_block(std::uint32_t h) const {
    return layout.M >= 2 && bits[std::size_t{h} * layout.M + layout.M - 1] != 0;
  }

  /// Exactly one active unit per block.
  [[nodiscard]] bool one_per_block() const {
    for (std::uint32_t h = 0; h < layout.H; ++h) {
      const auto first = bits.begin() + static_cast<std::ptrdiff_t>(std::size_t{h} * layout.M);
      if (std::count(first, first + layout.M, std::uint8_t{1}) != 1) return false;
    }
    return true;
  }

  friend bool operator==(const Pattern& a, const Pattern& b) { return a.bits == b.bits; }
};

enum class PatternKind { nrand, hrand, silent, cnrand, chrand };

inline std::string_view to_string(PatternKind k) {
  switch (k) {
    case PatternKind::nrand: return "nrand";
    case PatternKind::hrand: return "hrand";
    case PatternKind::silent: return "silent";
    case PatternKind::cnrand: return "cnrand";
    case PatternKind::chrand: return "chrand";
  }
  return "?";
}

inline PatternKind parse_pattern_kind(std::string_view s) {
  if (s == "nrand") return PatternKind::nrand;
  if (s == "hrand") return PatternKind::hrand;
  if (s == "silent") return PatternKind::silent;
  if (s == "cnrand") return PatternKind::cnrand;
  if (s == "chrand") return PatternKind::chrand;
  throw std::invalid_argument("unknown pattern kind: " + std::string(s));
}

/// K-of-N kinds; all others have one active unit per block.
inline bool is_unstructured(PatternKind k) {
  return k == PatternKind::nrand || k == PatternKind::cnrand;
}

inline bool is_correlated(PatternKind k) {
  return k == PatternKind::cnrand || k == PatternKind::chrand;
}

struct PatternSpec {
  PatternKind kind = PatternKind::hrand;
  double silent_fraction = 0.25;
  double f_p = 0.1;
  std::optional<Pattern> parent{};  // bias prototype for c-kinds
};

// ---------------------------------------------------------------------------

inline void check_layout(const Pattern& p, const Layout& layout) {
  if (p.bits.size() != layout.N())
    throw std::invalid_argument("pattern length does not match layout");
}

/// floor(x) or ceil(x), the latter with probability frac(x).
inline std::size_t mix_floor_ceil(double x, Rng& rng) {
  const double lo = std::floor(x);
  const double frac = x - lo;
  auto n = static_cast<std::size_t>(lo);
  if (frac > 0.0 && rng.bernoulli(frac)) ++n;
  return n;
}

/// k distinct indices drawn uniformly from [0, n), in draw order.
inline std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                             Rng& rng) {
  if (k > n) throw std::invalid_argument("cannot sample more items than available");
  std::vector<std::uint32_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<std::uint32_t>(i);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + rng.below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

inline Pattern generate_hrand(const Layout& layout, Rng& rng) {
  Pattern p(layout);
  for (std::uint32_t h = 0; h < layout.H; ++h)
    p.bits[std::size_t{h} * layout.M + rng.below(layout.M)] = 1;
  return p;
}

inline Pattern generate_nrand(const Layout& layout, Rng& rng) {
  Pattern p(layout);
  for (auto u : sample_without_replacement(layout.N(), layout.K(), rng)) p.bits[u] = 1;
  return p;
}

/// Number of silent blocks for each of n_patterns patterns.
inline std::vector<std::size_t> silent_counts(std::uint32_t H, double silent_fraction,
                                              std::size_t n_patterns, Rng& rng) {
  const double h_sil = silent_fraction * H;
  if (!(h_sil >= 0.0) || h_sil > H) throw std::invalid_argument("silent fraction out of range");
  std::vector<std::size_t> out(n_patterns);
  for (auto& n : out) n = mix_floor_ceil(h_sil, rng);
  return out;
}

inline Pattern generate_silent(const Layout& layout, std::size_t n_silent, Rng& rng) {
  if (layout.M < 2) throw std::invalid_argument("silent patterns need M >= 2");
  if (n_silent > layout.H) throw std::invalid_argument("more silent blocks than hypercolumns");
  Pattern p(layout);
  std::vector<std::uint8_t> silent(layout.H, 0);
  for (auto h : sample_without_replacement(layout.H, n_silent, rng)) silent[h] = 1;
  for (std::uint32_t h = 0; h < layout.H; ++h) {
    const std::size_t base = std::size_t{h} * layout.M;
    if (silent[h])
      p.bits[base + layout.M - 1] = 1;
    else
      p.bits[base + rng.below(layout.M - 1)] = 1;
  }
  return p;
}

namespace detail {

// One cnrand slot: with probability f_p an unused parent unit, else any unused unit.
inline std::uint32_t draw_correlated_unit(const Pattern& current,
                                          const std::vector<std::uint32_t>& parent_active,
                                          double f_p, Rng& rng) {
  const bool copy = rng.bernoulli(f_p);
  if (copy) {
    std::vector<std::uint32_t> free;
    for (auto u : parent_active)
      if (!current.bits[u]) free.push_back(u);
    if (!free.empty()) return free[rng.below(free.size())];
  }
  const std::size_t n_free = current.size() - current.active_count();
  auto pick = rng.below(n_free);
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current.bits[i]) continue;
    if (pick-- == 0) return static_cast<std::uint32_t>(i);
  }
  throw std::logic_error("no free unit");
}

}  // namespace detail

inline Pattern generate_correlated(const Layout& layout, const Pattern& parent, double f_p,
                                   Rng& rng) {
  check_layout(parent, layout);
  if (f_p < 0.0 || f_p > 1.0) throw std::invalid_argument("f_p must lie in [0, 1]");
  Pattern p(layout);
  if (layout.is_modular()) {
    for (std::uint32_t h = 0; h < layout.H; ++h) {
      const std::size_t base = std::size_t{h} * layout.M;
      if (rng.bernoulli(f_p))
        p.bits[base + parent.block_winner(h)] = 1;
      else
        p.bits[base + rng.below(layout.M)] = 1;
    }
    return p;
  }
  const auto parent_active = parent.active_units();
  for (std::size_t slot = 0; slot < layout.K(); ++slot)
    p.bits[detail::draw_correlated_unit(p, parent_active, f_p, rng)] = 1;
  return p;
}

/// Number of units/blocks eligible for resampling in `p` under `kind`.
inline std::size_t eligible_count(const Pattern& p, PatternKind kind) {
  if (kind == PatternKind::silent) {
    std::size_t n = 0;
    for (std::uint32_t h = 0; h < p.layout.H; ++h)
      if (!p.is_silent_block(h)) ++n;
    return n;
  }
  if (is_unstructured(kind)) return p.active_count();
  return p.layout.H;
}

/// Resamples n_resample blocks (or active units for K-of-N kinds) of `p`.
/// Fractional counts mix floor and ceil. A redraw may reproduce the original.
inline Pattern distort(const Pattern& p, double n_resample, Rng& rng, const PatternSpec& spec) {
  const Layout& layout = p.layout;
  const std::size_t eligible = eligible_count(p, spec.kind);
  if (!(n_resample >= 0.0) || n_resample > static_cast<double>(eligible))
    throw std::invalid_argument("resample count exceeds eligible hypercolumns");
  const std::size_t count = std::min(mix_floor_ceil(n_resample, rng), eligible);
  Pattern out = p;
  if (count == 0) return out;
  if (is_correlated(spec.kind) && !spec.parent)
    throw std::invalid_argument("correlated distortion needs the parent pattern");

  if (is_unstructured(spec.kind)) {
    const auto active = p.active_units();
    const auto chosen = sample_without_replacement(active.size(), count, rng);
    for (auto idx : chosen) out.bits[active[idx]] = 0;
    const std::vector<std::uint32_t> parent_active =
        spec.kind == PatternKind::cnrand ? spec.parent->active_units()
                                         : std::vector<std::uint32_t>{};
    const double f_p = spec.kind == PatternKind::cnrand ? spec.f_p : 0.0;
    for (std::size_t i = 0; i < count; ++i)
      out.bits[detail::draw_correlated_unit(out, parent_active, f_p, rng)] = 1;
    return out;
  }

  std::vector<std::uint32_t> blocks;
  for (std::uint32_t h = 0; h < layout.H; ++h)
    if (spec.kind != PatternKind::silent || !p.is_silent_block(h)) blocks.push_back(h);
  const auto chosen = sample_without_replacement(blocks.size(), count, rng);
  for (auto idx : chosen) {
    const std::uint32_t h = blocks[idx];
    const std::size_t base = std::size_t{h} * layout.M;
    std::fill_n(out.bits.begin() + static_cast<std::ptrdiff_t>(base), layout.M, std::uint8_t{0});
    std::uint32_t unit = 0;
    switch (spec.kind) {
      case PatternKind::silent: unit = static_cast<std::uint32_t>(rng.below(layout.M - 1)); break;
      case PatternKind::chrand:
        unit = rng.bernoulli(spec.f_p) ? spec.parent->block_winner(h)
                                       : static_cast<std::uint32_t>(rng.below(layout.M));
        break;
      default: unit = static_cast<std::uint32_t>(rng.below(layout.M)); break;
    }
    out.bits[base + unit] = 1;
  }
  return out;
}

/// Modular: number of blocks whose active unit differs. Non-modular: K minus
/// the size of the active-set intersection.
inline std::size_t pattern_distance(const Pattern& a, const Pattern& b) {
  if (a.layout != b.layout || a.size() != b.size())
    throw std::invalid_argument("pattern layouts differ");
  if (a.layout.is_modular()) {
    std::size_t d = 0;
    for (std::uint32_t h = 0; h < a.layout.H; ++h)
      if (a.block_winner(h) != b.block_winner(h)) ++d;
    return d;
  }
  std::size_t shared = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.bits[i] && b.bits[i]) ++shared;
  return a.layout.K() - std::min(shared, a.layout.K());
}

/// The base (uncorrelated) kind used to draw a c-kind's parent.
inline Pattern generate_parent(const Layout& layout, PatternKind kind, Rng& rng) {
  return is_unstructured(kind) ? generate_nrand(layout, rng) : generate_hrand(layout, rng);
}

/// One pattern of `spec.kind`. n_silent is only read for the silent kind.
inline Pattern generate(const Layout& layout, const PatternSpec& spec, Rng& rng,
                        std::size_t n_silent = 0) {
  switch (spec.kind) {
    case PatternKind::nrand: return generate_nrand(layout, rng);
    case PatternKind::hrand: return generate_hrand(layout, rng);
    case PatternKind::silent: return generate_silent(layout, n_silent, rng);
    case PatternKind::cnrand:
    case PatternKind::chrand:
      if (!spec.parent) throw std::invalid_argument("correlated kinds need a parent pattern");
      return generate_correlated(layout, *spec.parent, spec.f_p, rng);
  }
  throw std::logic_error("unreachable");
}

/// A pattern set of `count` patterns. For c-kinds a fresh parent is drawn
/// first and stored in `spec.parent`; it is not part of the returned set.
inline std::vector<Pattern> generate_set(const Layout& layout, PatternSpec& spec,
                                         std::size_t count, Rng& rng) {
  if (is_unstructured(spec.kind) && layout.is_modular())
    throw std::invalid_argument("K-of-N pattern kinds need the non-modular architecture");
  if (is_correlated(spec.kind)) spec.parent = generate_parent(layout, spec.kind, rng);
  std::vector<std::size_t> n_silent(count, 0);
  if (spec.kind == PatternKind::silent)
    n_silent = silent_counts(layout.H, spec.silent_fraction, count, rng);
  std::vector<Pattern> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate(layout, spec, rng, n_silent[i]));
  return out;
}

/// One line of '0'/'1'; `pretty` inserts '|' between blocks.
inline std::string to_text_grid(const Pattern& p, bool pretty) {
  std::string s;
  s.reserve(p.size() + (pretty ? p.layout.H : 0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (pretty && i > 0 && i % p.layout.M == 0) s.push_back('|');
    s.push_back(p.bits[i] ? '1' : '0');
  }
  return s;
}

}  // namespace hebbmem
