#pragma once

#include <cstdint>
#include <random>

namespace nac {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the `stream`-th independent stream derived from `base`.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

inline Rng make_stream(std::uint64_t base, std::uint64_t stream) {
  return Rng(stream_seed(base, stream));
}

}  // namespace nac
