#pragma once

#include <cstdint>
#include <random>

namespace permlab {

// Deterministic randomness. The engine is std::mt19937_64 (the standard pins
// its output sequence), and the mappings below avoid std::uniform_*_distribution
// on purpose: those are implementation-defined, these are not. Given the same
// seed, every platform produces the same stream, bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0,1) with 53 random bits, the usual double construction.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Unbiased integer in [0,n) by masked rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0};
    mask >>= __builtin_clzll((n - 1) | 1);
    for (;;) {
      std::uint64_t r = eng_() & mask;
      if (r < n) return r;
    }
  }

  // Sub-seed derivation for sharded work: splitmix64 over (seed, index).
  // Shard results depend only on (master seed, shard index), never on how
  // many workers ran them.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace permlab
