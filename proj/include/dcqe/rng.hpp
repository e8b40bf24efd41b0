#pragma once

#include <cstdint>
#include <random>

namespace dcqe {

/// Every sampling routine takes one of these explicitly; there is no global
/// generator anywhere in the library.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `index` in family `stream` derived from a run seed.
/// Substreams depend only on (seed, stream, index), never on thread layout.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                       std::uint64_t index) {
  return mix64(mix64(seed ^ mix64(stream)) + index);
}

inline Rng make_substream(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  return Rng(substream_seed(seed, stream, index));
}

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace dcqe
