// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace lidarworld {

/// Stateless 64-bit mixer used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic generator. Substreams keyed by (seed, stream, index) let
/// parallel workers draw reproducibly regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(splitmix64(splitmix64(seed ^ splitmix64(stream + 1)) + index));
  }

  /// Uniform in [0, 1).
  double uniform() { return std::generate_canonical<double, 53>(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in the open interval (0, 1).
  double uniform_open() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return u;
  }
  std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lidarworld
