#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hebbmem/patterns.hpp"
#include "hebbmem/plasticity.hpp"

namespace hebbmem {

/// Exact binomial coefficient C(n, k).
inline boost::multiprecision::cpp_int binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  boost::multiprecision::cpp_int r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;  // exact: r is C(n-k+i, i) here
  }
  return r;
}

/// log2 of a positive big integer, to double precision.
inline double log2_big(const boost::multiprecision::cpp_int& x) {
  if (x <= 0) throw std::domain_error("log2 of non-positive value");
  const auto msb = boost::multiprecision::msb(x);
  if (msb < 63) return std::log2(x.convert_to<double>());
  const auto shift = static_cast<unsigned>(msb - 62);
  const boost::multiprecision::cpp_int top = x >> shift;
  return std::log2(top.convert_to<double>()) + shift;
}

/// Bits per stored pattern: H log2 M (modular) or log2 C(N, K) (non-modular).
inline double pattern_information(const Layout& layout) {
  if (layout.is_modular()) return layout.H * std::log2(static_cast<double>(layout.M));
  return log2_big(binomial(layout.N(), layout.K()));
}

/// The scaling law's dependence on network size: N^2 / (2 I_p).
inline double capacity_scale(const Layout& layout) {
  const double ip = pattern_information(layout);
  if (ip <= 0.0) throw std::domain_error("pattern carries no information; capacity model undefined");
  const auto n = static_cast<double>(layout.N());
  return n * n / (2.0 * ip);
}

/// Predicted pattern count for a given number of bits stored per weight.
inline double capacity_model(const Layout& layout, double bits_per_weight) {
  return capacity_scale(layout) * bits_per_weight;
}

struct CapacityPoint {
  Layout layout;
  double P90 = 0.0;
};

struct BitsPerWeight {
  double I_w = 0.0;
  double residual = 0.0;  // sum of squared errors
  std::size_t n_points = 0;
};

/// Least squares for the single coefficient I_w in P = g(N) I_w.
inline BitsPerWeight fit_bits_per_weight(std::span<const CapacityPoint> points) {
  if (points.empty()) throw std::invalid_argument("fit needs at least one capacity point");
  const auto arch = points.front().layout.arch;
  double sgp = 0.0, sgg = 0.0;
  std::vector<double> g(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].layout.arch != arch)
      throw std::invalid_argument("fit points must share one architecture");
    const double ip = pattern_information(points[k].layout);
    const auto n = static_cast<double>(points[k].layout.N());
    g[k] = ip > 0.0 ? n * n / (2.0 * ip) : 0.0;
    sgp += g[k] * points[k].P90;
    sgg += g[k] * g[k];
  }
  if (sgg == 0.0) throw std::domain_error("all capacity points carry zero information");
  BitsPerWeight out{sgp / sgg, 0.0, points.size()};
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = points[k].P90 - out.I_w * g[k];
    out.residual += r * r;
  }
  return out;
}

/// Reference bits-per-weight values for random patterns; used to seed the
/// capacity search.
inline double bits_per_weight_prior(Rule rule, Architecture arch) {
  const bool mod = arch == Architecture::modular;
  switch (rule) {
    case Rule::HEBB: return mod ? 0.13 : 0.14;
    case Rule::HOPF: return mod ? 0.17 : 0.20;
    case Rule::COV: return mod ? 0.18 : 0.22;
    case Rule::PRCOV: return mod ? 0.20 : 0.24;
    case Rule::WILL: return mod ? 0.37 : 0.41;
    case Rule::BCPNN: return mod ? 0.57 : 0.60;
  }
  return 0.0;
}

}  // namespace hebbmem
