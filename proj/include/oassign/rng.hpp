#pragma once

#include <cmath>
#include <cstdint>

#include "oassign/geometry.hpp"

namespace oassign {

// Deterministic splitmix64 stream with platform-independent double mapping.
// std::uniform_real_distribution is implementation-defined, so the reports
// this feeds would stop being byte-stable across standard libraries.
struct Rng {
  std::uint64_t state = 0;

  explicit Rng(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double next_gauss() {
    double u1 = next_unit();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * kPi * u2);
  }
};

}  // namespace oassign
