#pragma once

#include <cstdint>
#include <random>

namespace uniftest {

// The generator and every derived draw below are fixed so that golden outputs
// are identical across standard libraries: std::mt19937_64's output sequence
// is specified by the standard, the std:: distributions are not.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`. Substreams are indexed, not
/// drawn sequentially, so trial t sees the same stream under any scheduling.
inline constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform integer in [0, bound). Unbiased (rejection on the tail).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace uniftest
