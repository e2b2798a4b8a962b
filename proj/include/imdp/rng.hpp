#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace imdp {

/// Seeded generator used for every stochastic decision in the library.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// derives floats and integers with explicit bit arithmetic rather than the
/// <random> distributions, whose algorithms are implementation-defined. The
/// same seed therefore yields the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed-splitting rule: the seed for item `index` of stream `stream` under
/// `master` is splitmix64(splitmix64(splitmix64(master) ^ stream) + index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// 64-bit FNV-1a, used to turn condition names into stream identifiers.
std::uint64_t fnv1a(std::string_view text);

}  // namespace imdp
