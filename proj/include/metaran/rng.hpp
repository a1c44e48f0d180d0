#pragma once

#include <cstdint>
#include <random>

namespace metaran {

using Rng = std::mt19937_64;

// Independent random streams are keyed by (seed, task, purpose) so that adding
// a consumer never shifts the draws seen by another one.
enum class StreamPurpose : std::uint32_t {
  kEnvironment = 1,
  kEvaluation = 2,
  kInit = 3,
  kExploration = 4,
  kReplay = 5,
  kBaseline = 6,
};

inline Rng make_stream(std::uint64_t seed, std::uint64_t task, StreamPurpose purpose,
                       std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

}  // namespace metaran
