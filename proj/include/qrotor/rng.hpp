#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace qrotor {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic stream keyed by (seed, k0, k1, ...). Distinct key tuples give
/// statistically independent streams, and a stream depends only on its key,
/// never on how many other streams were drawn before it. Typical keys are
/// (purpose tag, time step, attempt, stage, chain).
inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::span<const std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(mix64(h)), static_cast<std::uint32_t>(mix64(h) >> 32)};
  return std::mt19937_64(seq);
}

inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return keyed_rng(seed, std::span<const std::uint64_t>(keys.begin(), keys.size()));
}

}  // namespace qrotor
