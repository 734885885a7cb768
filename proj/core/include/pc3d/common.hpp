#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pc3d {

// Malformed or inconsistent configuration. The CLI maps this to its own exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Uniform draw in [0, 1) with 53 random bits. Used instead of
// std::uniform_real_distribution so streams are identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound). Modulo bias is irrelevant for the small bounds used here.
inline int uniform_index(Rng& rng, int bound) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(bound));
}

// SplitMix64 finalizer; derives independent child seeds from (seed, stream) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named streams so that different consumers of one master seed never share draws.
enum class SeedStream : std::uint64_t {
  kCurriculum = 1,
  kEnvironment = 2,
  kPolicy = 3,
  kShuffle = 4,
  kInit = 5,
  kEvaluation = 6,
  kDiagnostics = 7,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(stream)), index);
}

}  // namespace pc3d
