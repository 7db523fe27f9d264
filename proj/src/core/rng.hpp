#pragma once

#include <cstdint>
#include <string_view>

namespace eie {

// Counter-based splittable generator, "eie-rng/1".
//
// The i-th raw output of a stream with key k is
//
//   out(k, i) = finalize(k + i * 0x9E3779B97F4A7C15)
//
// where finalize() is the SplitMix64 finalizer (Steele et al., "Fast
// splittable pseudorandom number generators"). Child streams are derived by
// key mixing, not by advancing a shared state, so any stream is a pure
// function of (root seed, derivation path, counter). Training code keys its
// streams by (seed, purpose, iteration), which is what makes checkpoint
// resume reproduce the exact random sequence of an uninterrupted run.
//
// uniform() maps the top 53 bits to a double in [0,1). normal() is
// Box-Muller; it goes through libm so it is bit-stable per platform, while
// the integer outputs and every uniform-threshold decision are bit-stable
// everywhere.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // FNV-1a, used to turn purpose labels into derivation constants.
  static uint64_t hash_label(std::string_view label) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  Rng split(std::string_view label) const { return split(hash_label(label)); }
  Rng split(uint64_t label) const {
    return Rng(mix(key_ ^ (label * 0xC2B2AE3D27D4EB4FULL) ^ 0x9E3779B97F4A7C15ULL));
  }

  uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n);

  double normal();

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace eie
