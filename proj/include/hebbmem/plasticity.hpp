#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hebbmem/patterns.hpp"

namespace hebbmem {

enum class Rule { WILL, HEBB, HOPF, COV, PRCOV, BCPNN };

inline constexpr std::array<Rule, 6> kAllRules = {Rule::WILL, Rule::HEBB,  Rule::HOPF,
                                                  Rule::COV,  Rule::PRCOV, Rule::BCPNN};

inline std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::WILL: return "WILL";
    case Rule::HEBB: return "HEBB";
    case Rule::HOPF: return "HOPF";
    case Rule::COV: return "COV";
    case Rule::PRCOV: return "PRCOV";
    case Rule::BCPNN: return "BCPNN";
  }
  return "?";
}

inline Rule parse_rule(std::string_view s) {
  std::string up(s);
  for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto r : kAllRules)
    if (to_string(r) == up) return r;
  throw std::invalid_argument("unknown learning rule: " + std::string(s));
}

/// Thrown when weights are requested from a state that has seen no patterns.
class DegenerateStateError : public std::runtime_error {
 public:
  DegenerateStateError() : std::runtime_error("synaptic state has no trained patterns") {}
};

/// Dense row-major matrix; (i, j) is presynaptic i, postsynaptic j.
template <class T>
struct Matrix {
  std::size_t n = 0;
  std::vector<T> data;

  Matrix() = default;
  explicit Matrix(std::size_t size, T init = T{}) : n(size), data(size * size, init) {}

  T& operator()(std::size_t i, std::size_t j) noexcept { return data[i * n + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data[i * n + j]; }

  [[nodiscard]] std::span<const T> row(std::size_t i) const noexcept {
    return {data.data() + i * n, n};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Counters c, c_i, c_ij. c_j is the same vector as c_i in the autoassociative
/// setting.
struct SynapticState {
  std::uint64_t c = 0;
  std::vector<std::uint32_t> c_i;
  Matrix<std::uint32_t> c_ij;

  SynapticState() = default;
  explicit SynapticState(std::size_t n) : c_i(n, 0), c_ij(n, 0) {}

  [[nodiscard]] std::size_t size() const noexcept { return c_i.size(); }

  friend bool operator==(const SynapticState&, const SynapticState&) = default;
};

struct PEstimates {
  std::vector<double> p_i;
  Matrix<double> p_ij;
  double epsilon = 0.0;
};

struct WeightState {
  Matrix<double> w;
  std::vector<double> b;
  Rule rule = Rule::BCPNN;
  double a = 0.0;  // mean activity, HOPF only

  [[nodiscard]] std::size_t size() const noexcept { return b.size(); }
};

inline double epsilon_for(Rule rule, std::uint64_t c) {
  return rule == Rule::BCPNN ? 1.0 / (1.0 + static_cast<double>(c)) : 1e-7;
}

/// One-shot update with a binary pattern: c += 1, c_i += x, c_ij += x x^T.
inline void train_pattern(SynapticState& state, const Pattern& x) {
  if (x.size() != state.size()) throw std::invalid_argument("pattern size does not match state");
  const auto active = x.active_units();
  ++state.c;
  for (auto i : active) {
    ++state.c_i[i];
    for (auto j : active) ++state.c_ij(i, j);
  }
}

inline SynapticState train(std::span<const Pattern> patterns, std::size_t n) {
  SynapticState s(n);
  for (const auto& p : patterns) train_pattern(s, p);
  return s;
}

inline PEstimates p_estimates(const SynapticState& state, Rule rule) {
  if (state.c == 0) throw DegenerateStateError();
  const std::size_t n = state.size();
  const double eps = epsilon_for(rule, state.c);
  const double eps2 = eps * eps;
  const double inv_c = 1.0 / static_cast<double>(state.c);
  PEstimates out{std::vector<double>(n), Matrix<double>(n), eps};
  for (std::size_t i = 0; i < n; ++i) out.p_i[i] = std::max(state.c_i[i] * inv_c, eps);
  for (std::size_t k = 0; k < n * n; ++k)
    out.p_ij.data[k] = std::max(state.c_ij.data[k] * inv_c, eps2);
  return out;
}

/// Mean unit activity used by the Hopfield rule.
inline double mean_activity(const Layout& layout) {
  return layout.is_modular() ? 1.0 / layout.M
                             : static_cast<double>(layout.K()) / static_cast<double>(layout.N());
}

/// Weight for one synapse from its p-estimates (and raw coincidence count for WILL).
inline double rule_weight(Rule rule, double p_i, double p_j, double p_ij, std::uint32_t c_ij,
                          double a) {
  switch (rule) {
    case Rule::WILL: return c_ij > 0 ? 1.0 : 0.0;
    case Rule::HEBB: return p_ij;
    case Rule::HOPF: return p_ij - a * (p_i + p_j) + a * a;
    case Rule::COV: return p_ij - p_i * p_j;
    case Rule::PRCOV: return (p_ij - p_i * p_j) / p_i;
    case Rule::BCPNN: return std::log(p_ij / (p_i * p_j));
  }
  return 0.0;
}

inline double rule_bias(Rule rule, double p_j) {
  return rule == Rule::BCPNN ? std::log(p_j) : 0.0;
}

/// Single synapse (i -> j) straight from the counters; used for trajectories.
/// Pairs where a ratio rule would read a floored estimate of a unit that was
/// never active: PRCOV conditions on the presynaptic unit, BCPNN on both.
/// Their weight is zero.
inline bool no_evidence(const SynapticState& state, Rule rule, std::size_t i, std::size_t j) {
  if (rule == Rule::PRCOV) return state.c_i[i] == 0;
  if (rule == Rule::BCPNN) return state.c_i[i] == 0 || state.c_i[j] == 0;
  return false;
}

inline double weight_at(const SynapticState& state, Rule rule, const Layout& layout,
                        std::size_t i, std::size_t j) {
  if (state.c == 0) throw DegenerateStateError();
  const double eps = epsilon_for(rule, state.c);
  const double inv_c = 1.0 / static_cast<double>(state.c);
  const double p_i = std::max(state.c_i[i] * inv_c, eps);
  const double p_j = std::max(state.c_i[j] * inv_c, eps);
  const double p_ij = std::max(state.c_ij(i, j) * inv_c, eps * eps);
  if (no_evidence(state, rule, i, j)) return 0.0;
  return rule_weight(rule, p_i, p_j, p_ij, state.c_ij(i, j), mean_activity(layout));
}

inline WeightState compute_weights(const SynapticState& state, Rule rule, const Layout& layout,
                                   bool zero_diagonal = false) {
  if (state.size() != layout.N()) throw std::invalid_argument("state size does not match layout");
  const auto pe = p_estimates(state, rule);
  const std::size_t n = state.size();
  WeightState ws{Matrix<double>(n), std::vector<double>(n, 0.0), rule, mean_activity(layout)};
  for (std::size_t i = 0; i < n; ++i) {
    const double p_i = pe.p_i[i];
    for (std::size_t j = 0; j < n; ++j)
      ws.w(i, j) = no_evidence(state, rule, i, j)
                       ? 0.0
                       : rule_weight(rule, p_i, pe.p_i[j], pe.p_ij(i, j), state.c_ij(i, j), ws.a);
  }
  for (std::size_t j = 0; j < n; ++j) ws.b[j] = rule_bias(rule, pe.p_i[j]);
  if (zero_diagonal)
    for (std::size_t i = 0; i < n; ++i) ws.w(i, i) = 0.0;
  return ws;
}

// --- checkpoint format -----------------------------------------------------
// "NAMS", u32 version, u32 N, u64 c, then N u32 unit counters and N*N u32
// coincidence counters, row-major. Everything little-endian.

inline constexpr std::uint32_t kStateFormatVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t k = 0; k < sizeof(T); ++k)
    buf[k] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xFF);
  os.write(buf.data(), buf.size());
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw std::runtime_error("truncated synaptic state dump");
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) v |= std::uint64_t{buf[k]} << (8 * k);
  return static_cast<T>(v);
}

}  // namespace detail

inline void save_state(std::ostream& os, const SynapticState& s) {
  os.write("NAMS", 4);
  detail::put_le<std::uint32_t>(os, kStateFormatVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  detail::put_le<std::uint64_t>(os, s.c);
  for (auto v : s.c_i) detail::put_le(os, v);
  for (auto v : s.c_ij.data) detail::put_le(os, v);
}

inline SynapticState load_state(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NAMS", 4) != 0)
    throw std::runtime_error("not a synaptic state dump");
  if (detail::get_le<std::uint32_t>(is) != kStateFormatVersion)
    throw std::runtime_error("unsupported synaptic state version");
  const auto n = detail::get_le<std::uint32_t>(is);
  SynapticState s(n);
  s.c = detail::get_le<std::uint64_t>(is);
  for (auto& v : s.c_i) v = detail::get_le<std::uint32_t>(is);
  for (auto& v : s.c_ij.data) v = detail::get_le<std::uint32_t>(is);
  return s;
}

}  // namespace hebbmem
