#pragma once

#include <cstdint>
#include <random>

namespace texloc {

/// All randomness in the library flows through explicitly seeded engines so
/// every run is replayable from its seed set.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Decorrelated child seed for an independent stream of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x632be59bd9b4e019ULL * (stream + 1));
  std::uint64_t a = splitmix64(s);
  return splitmix64(s) ^ a;
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) {
  return Rng(derive_seed(base, stream));
}

/// Stateless hash of integer lattice coordinates to [0, 1); the backbone of
/// the procedural floor texture.
inline double lattice_unit(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t s = seed;
  s ^= 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(ix) * 0xc2b2ae3d27d4eb4fULL;
  s ^= splitmix64(s) + static_cast<std::uint64_t>(iy) * 0x165667b19e3779f9ULL;
  const std::uint64_t h = splitmix64(s);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace texloc
