#pragma once

#include <cstdint>
#include <random>

namespace mos3d {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Uniform integer in [0, n).
inline int uniform_index(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

/// Derive an independent seed for a sub-stream (trial, worker, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace mos3d
