#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <random>

namespace wrep {

/// SplitMix64 finalizer. Used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a substream identified by `key` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

template <class... Keys>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, std::uint64_t next, Keys... rest) {
  return derive_seed(derive_seed(seed, key), next, static_cast<std::uint64_t>(rest)...);
}

inline std::uint64_t seed_key(double value) { return std::bit_cast<std::uint64_t>(value); }

/// Deterministic random source. The engine is mt19937_64, whose output
/// sequence is fixed by the C++ standard; all distributions are implemented
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Box-Muller transform; the second variate of
  /// each pair is cached.
  double normal();

  /// Uniform integer in [0, n) by rejection sampling. n must be positive.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wrep
