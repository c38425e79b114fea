#pragma once

#include <cstdint>
#include <random>

namespace bridge::uq {

/// SplitMix64 step; used as a counter-based mixer to derive independent
/// seed streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream splitting rule: the engine for (seed, chain, level) is seeded by
/// mixing the three values through SplitMix64. rwm() draws from stream
/// (seed, chain 0, level 0); MLDA chain c draws its level-l proposals and
/// acceptances from stream (seed, c, l).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t chain = 0,
                                   std::uint64_t level = 0) {
  std::uint64_t s = seed;
  splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL + chain;
  splitmix64(s);
  s ^= 0xbb67ae8584caa73bULL + level;
  return std::mt19937_64(splitmix64(s));
}

/// Uniform draw in the open interval (0, 1); safe to feed to quantile
/// functions and logarithms.
inline double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace bridge::uq
