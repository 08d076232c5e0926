#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dfr/core/types.hpp"

namespace dfr {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG. Doubles are produced by explicit bit mapping so
// sequences do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : seed_(seed), gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  Real uniform() { return Real((gen_() >> 11) * 0x1.0p-53); }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  int64_t below(int64_t n) { return int64_t(gen_() % uint64_t(n)); }

  // standard normal via Box-Muller
  Real normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    Real u1 = uniform(), u2 = uniform();
    while (u1 <= Real(1e-300)) u1 = uniform();
    Real r = std::sqrt(Real(-2) * std::log(u1));
    Real a = Real(2) * Real(M_PI) * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  uint64_t seed() const { return seed_; }

  // Independent child stream keyed off this stream's seed, e.g. one per
  // pixel or per frame. Does not consume state from the parent.
  Rng fork(uint64_t salt) const {
    return Rng(splitmix64(splitmix64(seed_) ^ splitmix64(salt)));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  Real spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace dfr
