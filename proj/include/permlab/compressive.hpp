#pragma once

#include <vector>

#include "permlab/permutation.hpp"

namespace permlab {

// Ordered partition of [k] into consecutive intervals on which tau acts as a
// constant shift: tau(a) = a + shift[i] for every a in the i-th block.
struct CompressivePartition {
  std::vector<std::pair<int, int>> blocks;  // [first,last], 1-based, inclusive
  std::vector<int> shifts;

  int block_count() const { return static_cast<int>(blocks.size()); }
  int block_size(int i) const {
    return blocks[static_cast<size_t>(i)].second - blocks[static_cast<size_t>(i)].first + 1;
  }
};

// Validates the blocks against tau and fills in the shifts.
CompressivePartition make_compressive(const Permutation& tau,
                                      const std::vector<std::pair<int, int>>& blocks);

// All compressive partitions of tau, coarsest-boundary enumeration over the
// 2^(k-1) interval partitions. The all-singletons partition is always present.
std::vector<CompressivePartition> enumerate_compressive(const Permutation& tau);

// Shrinks each block to a point and returns the induced pattern. Any block
// representative gives the same result; block starts are used.
Permutation quotient(const Permutation& tau, const CompressivePartition& part);

}  // namespace permlab
