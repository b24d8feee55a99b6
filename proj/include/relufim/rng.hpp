#pragma once

#include <cstdint>
#include <random>

namespace relufim {

// Seed domains keep independent consumers (weights, feature sampling, oracle
// estimates, Lanczos start vectors) on disjoint streams for the same user seed.
enum class SeedDomain : std::uint64_t {
  Weights = 0x57,
  Features = 0x58,
  Oracle = 0x4f,
  Lanczos = 0x4c,
  Subsample = 0x53,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives the 64-bit seed of substream `index` in `domain` from a user seed.
std::uint64_t derive_seed(std::uint64_t seed, SeedDomain domain, std::uint64_t index = 0) noexcept;

/// Reproducible standard-normal stream.
///
/// Generator: std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Uniforms are u = (k >> 11) * 2^-53. Normals use the
/// Box-Muller pair z0 = r cos(2 pi u2), z1 = r sin(2 pi u2) with
/// r = sqrt(-2 ln(1 - u1)); both members of the pair are emitted, z0 first.
/// Results are bit-identical across runs on the same platform libm.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept;
  double normal() noexcept;

  static constexpr const char* algorithm = "mt19937_64+box-muller/v1";

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace relufim
