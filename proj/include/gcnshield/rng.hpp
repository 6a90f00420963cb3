#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gcnshield/common.hpp"

namespace gcnshield {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic random source. mt19937_64 has a standardized output
/// sequence, and all distributions here are hand-rolled, so the same seed
/// yields the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (base_seed, stream_tag).
  static Rng derive(std::uint64_t base_seed, std::uint64_t stream_tag) {
    std::uint64_t s = base_seed;
    detail::splitmix64(s);
    s ^= 0x5851f42d4c957f2dULL * (stream_tag + 1);
    return Rng(detail::splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n), via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int index(std::size_t n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  /// Standard normal via Box-Muller (one value per call; the pair's second
  /// member is discarded to keep the stream position easy to reason about).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// k distinct elements drawn uniformly from pool, in draw order.
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
    std::vector<T> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && !pool.empty(); ++i) {
      const std::size_t j = below(pool.size());
      out.push_back(pool[j]);
      pool[j] = pool.back();
      pool.pop_back();
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gcnshield
