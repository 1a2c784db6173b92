#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vafs {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stateless counter-based generator: the value at (stream, counter) depends only on the seed.
/// Draws can be made in any order, including from several threads.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
    return mix64(mix64(seed_ ^ mix64(stream)) + counter);
  }

  /// Uniform in [0,1) with 53 bits of precision.
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two consecutive counters.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(stream, 2 * counter);  // (0,1]
    const double u2 = uniform(stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace vafs
