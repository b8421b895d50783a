#pragma once

// Seeded sampling helpers with a fixed algorithm, so generated data does not
// depend on the standard library's distribution implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace perfcast::rnd {

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& rng, double lo, double hi)
{
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, m) by rejection (unbiased).
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t m)
{
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % m;
}

/// Standard normal via Box-Muller (one draw per call, second discarded).
inline double normal(Engine& rng)
{
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class It>
void shuffle(It first, It last, Engine& rng)
{
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1), first + static_cast<std::ptrdiff_t>(j));
  }
}

} // namespace perfcast::rnd
