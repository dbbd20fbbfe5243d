// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "disoul/common.hpp"

namespace disoul {

// Seeded random stream. All variate transforms are written out explicitly so
// that a given seed reproduces the same sequence on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; draws are generated in pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return radius * std::cos(kTwoPi * u2);
  }

  // Circularly symmetric complex Gaussian with E|x|^2 = variance.
  cplx circular_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = s * normal();
    const double im = s * normal();
    return {re, im};
  }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  // Zero-mean Laplacian with standard deviation sigma.
  double laplace(double sigma) {
    const double b = sigma / std::sqrt(2.0);
    const double u = uniform() - 0.5;
    return -b * std::copysign(std::log(1.0 - 2.0 * std::fabs(u)), -u);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Derives a child seed from a master seed, an index and a purpose tag, so
// independent draws (arrays, channel, noise, ...) come from separate streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                 std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ master;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 32;
  };
  mix(index + 0x9e3779b97f4a7c15ull);
  for (const char c : tag) mix(static_cast<std::uint64_t>(c));
  mix(0xd6e8feb86659fd93ull);
  return h;
}

}  // namespace disoul
