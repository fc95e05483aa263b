#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace csigan {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Independent stream for item `index` under `seed`, e.g. per-position noise.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(mix64(seed) ^ mix64(index + 0x5851f42d4c957f2dull)));
}

inline std::string save_rng_state(const Rng &rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng load_rng_state(const std::string &state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw std::invalid_argument("load_rng_state: malformed generator state");
  return rng;
}

} // namespace csigan
