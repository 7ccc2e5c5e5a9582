#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cace {

// splitmix64 finalizer, used to derive independent sub-seeds from a root
// seed plus structural indices (setting id, replication index, chain id...).
// Counter-based derivation keeps parallel runs order-independent.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = 0x2545f4914f6cdd1dULL;
  for (std::uint64_t p : parts) s = mix64(s ^ mix64(p));
  return s;
}

// Thin wrapper around mt19937_64.  All variate generation in the library
// goes through explicit free functions (see dist.hpp) so that a fixed seed
// gives a bit-identical stream regardless of standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform on (0,1), never returns exactly 0 or 1
  double uniform() {
    // 53-bit mantissa; +0.5 keeps the draw strictly inside (0,1)
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t bits() { return engine_(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = -n % n;
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cace
