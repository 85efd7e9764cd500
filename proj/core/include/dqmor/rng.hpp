#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dqmor {

/// Deterministic random source used everywhere the library needs randomness.
///
/// All draws reduce to the (fully specified) std::mt19937_64 output through
/// fixed transforms, so a given seed yields the same stream on every
/// platform:
///   - uniform():  53-bit draw, (x >> 11) * 2^-53, in [0, 1)
///   - gaussian(): Box-Muller, consuming exactly two uniforms per call:
///                 sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
///   - bounded(n): rejection sampling, unbiased
/// std::normal_distribution, std::uniform_*_distribution and std::shuffle
/// are implementation-defined and must not be used where reproducibility
/// matters.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw (Box-Muller; two uniforms per call).
  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t bounded(std::uint64_t n) {
    std::uint64_t x, r;
    do {
      x = engine_();
      r = x % n;
    } while (x - r > std::uint64_t(0) - n);
    return r;
  }

  /// Fisher-Yates shuffle driven by bounded().
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[bounded(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed (SplitMix64 step).
/// Used to give model initialization and every training epoch its own
/// reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dqmor
