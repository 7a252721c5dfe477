#pragma once

// Per-item random streams. Each stream is a Mersenne Twister whose integer
// seed is a SplitMix64 mix of (seed, index); the engine's integer seeding is
// fixed by the standard.
// Uniform and normal variates are derived here rather than through the
// standard distributions, whose algorithms vary between library vendors.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nevlab {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index) : gen_(mix(mix(seed) ^ index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Standard normal by Box-Muller; values come in pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform_open0(), v = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * v);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nevlab
