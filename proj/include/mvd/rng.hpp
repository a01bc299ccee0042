#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mvd {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to turn (seed, index, ...) tuples into
/// well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a path of indices. The result
/// depends only on the arguments, so work split across iterations or threads
/// reproduces bit for bit.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path = {}) {
  return Engine{derive_seed(seed, path)};
}

}  // namespace mvd
