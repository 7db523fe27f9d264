#include "core/rng.hpp"

#include <cmath>

namespace eie {

uint64_t Rng::next_below(uint64_t n) {
  // Rejection sampling keeps the distribution exactly uniform.
  if (n == 0) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  // Box-Muller, one normal per pair of uniforms (nothing cached so the
  // number of raw draws per call is fixed).
  double u1 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace eie
