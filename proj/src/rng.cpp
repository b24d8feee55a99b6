#include "relufim/rng.hpp"

#include <cmath>
#include <numbers>

namespace relufim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, SeedDomain domain, std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(domain));
  return splitmix64(h ^ index);
}

double GaussianStream::uniform() noexcept {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double phase = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phase);
  has_spare_ = true;
  return r * std::cos(phase);
}

}  // namespace relufim
