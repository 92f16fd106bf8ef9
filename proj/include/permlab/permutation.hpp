#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "permlab/common.hpp"
#include "permlab/rng.hpp"

namespace permlab {

// One-line notation, 1-based values. Immutable after construction.
class Permutation {
 public:
  explicit Permutation(std::vector<int> one_line);

  static Permutation identity(int n);
  static Permutation reversal(int n);
  // Parses comma-separated one-line notation, e.g. "2,4,1,3". Errors carry
  // the offending token and its position.
  static Permutation parse(const std::string& text);

  int order() const { return static_cast<int>(v_.size()); }
  // 1-based access: (*this)(i) = sigma(i).
  int operator()(int i) const { return v_[static_cast<size_t>(i) - 1]; }
  const std::vector<int>& values() const { return v_; }

  std::string str() const;

  bool operator==(const Permutation&) const = default;
  // Lexicographic on one-line notation; used as the last canonical tie-break.
  auto operator<=>(const Permutation& o) const { return v_ <=> o.v_; }

 private:
  std::vector<int> v_;
};

// Relabels arbitrary distinct values to the pattern they induce.
Permutation pattern_of(std::span<const int> values);

std::vector<std::pair<int, int>> inversions(const Permutation& s);
std::uint64_t inversion_count(const Permutation& s);  // Fenwick, O(n log n)

bool is_indecomposable(const Permutation& s);
bool is_simple(const Permutation& s);
// No position with s(i+1) == s(i) + 1; every simple permutation qualifies.
bool is_thorough(const Permutation& s);

// True when every inversion of a is an inversion of b (same order required):
// the identity map embeds a into b monomorphically.
bool dominates(const Permutation& b, const Permutation& a);

Permutation random_permutation(int n, Rng& rng);  // Fisher-Yates

// Canonical order: ascending inversion count, then ascending order, then
// lexicographic one-line notation.
bool canonical_less(const Permutation& a, const Permutation& b);

enum class PatternClass { All, Indecomposable, Simple, Thorough };

inline constexpr int kEnumerationCap = 8;

// All permutations of order <= max_order satisfying the predicate, in
// canonical order. Trivial (1) is excluded when include_trivial is false.
std::vector<Permutation> enumerate_patterns(int max_order, PatternClass cls,
                                            bool include_trivial = true,
                                            int cap = kEnumerationCap);

// Non-trivial indecomposable patterns of order <= q, canonical order. This is
// the index set used by density vectors and the mon matrix.
std::vector<Permutation> canonical_pattern_list(int q, int cap = kEnumerationCap);

struct UniformStats {
  double fraction_indecomposable = 0.0;
  double fraction_simple = 0.0;
  std::uint64_t samples = 0;
};

// Monte Carlo over uniform permutations of order n. Sharded internally so the
// result depends on (n, samples, seed) only, not on the thread count.
UniformStats sample_uniform_statistics(int n, std::uint64_t samples,
                                       std::uint64_t seed, int threads = 1);

}  // namespace permlab
