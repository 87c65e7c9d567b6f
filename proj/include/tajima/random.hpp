#pragma once

#include <cstdint>
#include <random>

namespace tajima {

using Rng = std::mt19937_64;

inline auto uniform01(Rng& rng) -> double {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline auto uniform_int(Rng& rng, int lo, int hi) -> int {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Seed for an independent stream derived from a master seed (splitmix64).
inline auto derive_seed(std::uint64_t master, std::uint64_t stream) -> std::uint64_t {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Draw from N(mean, sd^2) truncated to [lo, inf).
auto truncated_normal(Rng& rng, double mean, double sd, double lo) -> double;
auto truncated_normal_logpdf(double x, double mean, double sd, double lo) -> double;

}  // namespace tajima
