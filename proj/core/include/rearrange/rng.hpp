#pragma once

#include <cstdint>
#include <random>

namespace rearrange {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, index). Streams separate the
/// consumers inside one episode (initial state vs. policy noise), the index
/// is usually an episode or example number.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(index), hi(index)};
  return Rng(seq);
}

namespace streams {
inline constexpr std::uint64_t kInitialState = 0;
inline constexpr std::uint64_t kPolicy = 1;
inline constexpr std::uint64_t kTargets = 2;
inline constexpr std::uint64_t kTraining = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kOracle = 5;
inline constexpr std::uint64_t kGroundTruth = 6;
}  // namespace streams

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace rearrange
