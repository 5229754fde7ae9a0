#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace hebbmem {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a over raw bytes. Used for stream ids, so it must never change.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Identifies an independent random sequence. Identical (master_seed,
/// stream_id) pairs reproduce identical draws.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  /// Sub-stream for the index-th use of this stream (e.g. one simulation call).
  [[nodiscard]] constexpr RngStream child(std::uint64_t index) const noexcept {
    return {master_seed, splitmix64(stream_id ^ splitmix64(index + 0x632BE59BD9B4E019ULL))};
  }

  friend constexpr bool operator==(const RngStream&, const RngStream&) = default;
};

/// Generator bound to one stream. The engine (mt19937_64) has a fully
/// specified output sequence; the bounded/real helpers below are written out
/// so results do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(RngStream stream)
      : stream_(stream),
        engine_(splitmix64(stream.master_seed) ^ splitmix64(~stream.stream_id)) {}

  [[nodiscard]] const RngStream& stream() const noexcept { return stream_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform real in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  RngStream stream_;
  std::mt19937_64 engine_;
};

}  // namespace hebbmem
