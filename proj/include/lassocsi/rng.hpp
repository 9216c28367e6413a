#pragma once

#include <cstdint>
#include <random>

namespace lassocsi {

using RandomStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream for work item `index` under master `seed`. Depends only
/// on (seed, index), so any execution order yields the same draws.
inline RandomStream substream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t s = splitmix64(splitmix64(seed) ^ splitmix64(~index));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return RandomStream(seq);
}

}  // namespace lassocsi
