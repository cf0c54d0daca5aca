#pragma once

#include <cstdint>
#include <random>

namespace gfp::detail {

/// splitmix64 finalizer; used to derive well-separated per-path seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream for path m derived from (seed, m) only, so serial and parallel
/// generation produce identical ensembles.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path_index) {
  return std::mt19937_64(mix64(seed + 0x9E3779B97F4A7C15ULL * (path_index + 1)));
}

}  // namespace gfp::detail
