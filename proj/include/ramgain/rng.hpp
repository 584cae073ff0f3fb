#pragma once

#include <cstdint>
#include <vector>

namespace ramgain {

/// SplitMix64 finalizer. Used both as the generator step and as the
/// documented per-sample seed derivation (see derive_seed below).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-sample seed rule: seed_i = mix64(master ^ mix64(stream ^ mix64(id))).
/// Pure function of (master_seed, id, stream), so samples can be generated
/// in any order (or in parallel) without changing the result.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t id,
                                 std::uint64_t stream = 0) {
  return mix64(master_seed ^ mix64(stream ^ mix64(id)));
}

/// Small deterministic RNG (SplitMix64 stream). std::mt19937 would also be
/// portable, but the std distributions are not; all draws here are defined
/// bit-exactly so dataset files reproduce across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Debiased multiply-shift (Lemire).
  std::uint64_t uniform_index(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fisher-Yates with the portable index draw above.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace ramgain
