#pragma once

#include <cstdint>
#include <random>

namespace freqalloc {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); streams separate the scheduler
/// from the activity process so one can change without perturbing the other.
inline Rng make_rng(std::uint64_t seed, std::uint32_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

}  // namespace freqalloc
