#include "chunkalign/rng.hpp"

#include <cmath>

namespace chunkalign {

double Rng::gaussian() {
  // Box-Muller; u1 is kept away from zero so log() stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(hash_mix(state_, 0x632be59bd9b4e019ULL, stream));
}

std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  auto mix = [](std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
  };
  std::uint64_t h = seed;
  h = mix(h, a);
  h = mix(h, b);
  h = mix(h, c);
  return h;
}

}  // namespace chunkalign
