#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace mfp {

/// SplitMix64 generator.
///
/// Every random draw in the library goes through this type so that a seed
/// produces the same stream on every platform. Standard library
/// distributions are avoided because their algorithms are
/// implementation-defined.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream; the parent advances by one draw.
  SplitMix64 split() noexcept { return SplitMix64(next()); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n), unbiased (rejection on the tail).
  std::size_t index(std::size_t n) noexcept {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) {
      x = next();
    }
    return static_cast<std::size_t>(x % bound);
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept {
    return mean + stddev * normal();
  }

private:
  std::uint64_t state_;
};

/// Derives a seed for a named sub-stream, e.g. (seed, day index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 a(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  return a.next();
}

} // namespace mfp
