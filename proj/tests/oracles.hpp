#pragma once
// Reference computations used only by the tests. None of these call into the
// code paths they are used to check.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

/// Batch counters straight from the summation formulas over dense 0/1 vectors.
struct BatchCounters {
  std::uint64_t c = 0;
  std::vector<std::uint32_t> c_i;
  std::vector<std::uint32_t> c_ij;  // row-major n x n
};

inline BatchCounters batch_counters(const std::vector<std::vector<int>>& xs, std::size_t n) {
  BatchCounters b{0, std::vector<std::uint32_t>(n, 0), std::vector<std::uint32_t>(n * n, 0)};
  for (const auto& x : xs) {
    b.c += 1;
    for (std::size_t i = 0; i < n; ++i) {
      b.c_i[i] += static_cast<std::uint32_t>(x[i]);
      for (std::size_t j = 0; j < n; ++j) b.c_ij[i * n + j] += static_cast<std::uint32_t>(x[i] * x[j]);
    }
  }
  return b;
}

/// log2 C(n, k) through the log-gamma function.
inline double log2_binomial_lgamma(double n, double k) {
  return (std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)) / std::log(2.0);
}

/// Little base-2^32 big integer, enough to form C(n, k) by repeated
/// multiply-by-small and exact divide-by-small.
struct SmallBig {
  std::vector<std::uint32_t> limbs{1};

  void mul(std::uint32_t m) {
    std::uint64_t carry = 0;
    for (auto& l : limbs) {
      const std::uint64_t v = std::uint64_t{l} * m + carry;
      l = static_cast<std::uint32_t>(v);
      carry = v >> 32;
    }
    if (carry) limbs.push_back(static_cast<std::uint32_t>(carry));
  }

  void div(std::uint32_t d) {
    std::uint64_t rem = 0;
    for (std::size_t k = limbs.size(); k-- > 0;) {
      const std::uint64_t cur = (rem << 32) | limbs[k];
      limbs[k] = static_cast<std::uint32_t>(cur / d);
      rem = cur % d;
    }
    while (limbs.size() > 1 && limbs.back() == 0) limbs.pop_back();
  }

  [[nodiscard]] double log2() const {
    // top two limbs carry > 32 significant bits; the rest shifts the exponent
    const std::size_t n = limbs.size();
    if (n == 1) return std::log2(static_cast<double>(limbs[0]));
    const double top = static_cast<double>(limbs[n - 1]) * 4294967296.0 + limbs[n - 2] +
                       (n >= 3 ? limbs[n - 3] / 4294967296.0 : 0.0);
    return std::log2(top) + 32.0 * static_cast<double>(n - 2);
  }
};

inline double log2_binomial_exact(std::uint32_t n, std::uint32_t k) {
  SmallBig b;
  for (std::uint32_t i = 1; i <= k; ++i) {
    b.mul(n - k + i);
    b.div(i);
  }
  return b.log2();
}

/// Two-sample chi-square statistic over matching category counts.
inline double chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0, nb = 0;
  for (double x : a) na += x;
  for (double x : b) nb += x;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double chi = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] + b[i] == 0) continue;
    const double d = ka * a[i] - kb * b[i];
    chi += d * d / (a[i] + b[i]);
  }
  return chi;
}

}  // namespace oracle
