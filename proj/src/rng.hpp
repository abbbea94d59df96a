// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ksr {

// Counter-based generator: draw i of stream (seed, stream) is
// mix64(seed ^ mix64(stream + 1) + (i + 1) * 0x9E3779B97F4A7C15), where mix64 is the
// SplitMix64 finalizer. Uniforms take the top 53 bits; normals use Box-Muller
// (cosine branch only, two uniforms per draw).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(seed ^ mix64(stream + 1)) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ksr
