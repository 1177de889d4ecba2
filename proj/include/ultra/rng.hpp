#pragma once

#include <cstdint>
#include <random>

namespace ultra {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream id); same pair gives the same stream.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

}  // namespace ultra
