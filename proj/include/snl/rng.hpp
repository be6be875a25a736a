#pragma once

#include <cstdint>
#include <random>

namespace snl {

// Independent generator for (seed, stream); streams let one seed drive
// several uncorrelated draws (labels, noise, corruption, init, shuffling).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace streams {
inline constexpr std::uint64_t kTrainLabels = 1;
inline constexpr std::uint64_t kTrainNoise = 2;
inline constexpr std::uint64_t kCorruption = 3;
inline constexpr std::uint64_t kTestLabels = 4;
inline constexpr std::uint64_t kTestNoise = 5;
inline constexpr std::uint64_t kGeometry = 6;
inline constexpr std::uint64_t kInit = 7;
inline constexpr std::uint64_t kShuffle = 8;
inline constexpr std::uint64_t kProbe = 9;
}  // namespace streams

}  // namespace snl
