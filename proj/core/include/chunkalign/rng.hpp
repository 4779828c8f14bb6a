#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace chunkalign {

/// Deterministic PRNG (splitmix64 core). Unlike std::normal_distribution,
/// every draw is reproducible bit-for-bit across standard libraries and
/// platforms, which the simulator's byte-identical-output contract needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no internal caching, so draw order
  /// is exactly two uniforms per call).
  double gaussian();

  Eigen::Vector3d gaussian3() { return {gaussian(), gaussian(), gaussian()}; }

  Eigen::Vector3d uniform_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

  /// Derives an independent stream; used to key noise by (chunk, frame, pixel)
  /// so generated content does not depend on evaluation order.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
};

/// Order-independent 64-bit mix of a seed and up to three indices.
std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace chunkalign
