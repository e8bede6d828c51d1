#pragma once

#include <cstdint>

namespace dmp {

// Deterministic, platform-independent PRNG (splitmix64). std::mt19937 with
// the standard distributions is not bit-stable across library versions, and
// synthesized scenarios / initial weights must reproduce exactly from a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Derives an independent stream; used to decouple sub-generators so that
  // adding a draw in one place does not shift every later draw.
  Rng fork(std::uint64_t stream) {
    return Rng(next_u64() ^ (0x6a09e667f3bcc909ull * (stream + 1)));
  }

 private:
  std::uint64_t state_;
};

}  // namespace dmp
