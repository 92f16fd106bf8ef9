#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "permlab/permutation.hpp"
#include "permlab/rational.hpp"

namespace permlab {

struct PatternCounts {
  std::uint64_t occ = 0;  // strictly increasing maps inducing the pattern exactly
  std::uint64_t mon = 0;  // strictly increasing maps preserving inversions
  std::uint64_t hom = 0;  // non-decreasing maps preserving inversions
};

PatternCounts count_patterns(const Permutation& pat, const Permutation& host);

std::uint64_t count_occurrences(const Permutation& pat, const Permutation& host);
std::uint64_t count_monomorphisms(const Permutation& pat, const Permutation& host);
std::uint64_t count_homomorphisms(const Permutation& pat, const Permutation& host);

// Visits each occurrence's position tuple (1-based, strictly increasing).
void for_each_occurrence(const Permutation& pat, const Permutation& host,
                         const std::function<void(std::span<const int>)>& fn);

// Exact count of the strictly decreasing pattern (k,...,1) by a level DP over
// a Fenwick tree, O(k n log n). This keeps exact densities affordable at
// orders in the thousands, where tuple enumeration is hopeless.
std::uint64_t count_descending(int k, const Permutation& host);

// Occurrence counts of all six order-3 patterns, indexed canonically:
// (1,2,3),(1,3,2),(2,1,3),(2,3,1),(3,1,2),(3,2,1). O(n log n).
std::array<std::uint64_t, 6> order3_profile(const Permutation& host);

// Densities. occ and mon are 0 when |pat| > |host|; hom keeps the literal
// normalization binom(n+k-1, k) for every k.
Rat density(const Permutation& pat, const Permutation& host);
Rat density_mon(const Permutation& pat, const Permutation& host);
Rat density_hom(const Permutation& pat, const Permutation& host);

}  // namespace permlab
