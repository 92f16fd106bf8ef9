#include "permlab/compressive.hpp"

namespace permlab {

CompressivePartition make_compressive(const Permutation& tau,
                                      const std::vector<std::pair<int, int>>& blocks) {
  const int k = tau.order();
  CompressivePartition part;
  int expect = 1;
  for (auto [a, b] : blocks) {
    if (a != expect || b < a || b > k)
      throw ContractError("compressive partition blocks must tile 1.." +
                          std::to_string(k) + " in order");
    const int shift = tau(a) - a;
    for (int i = a + 1; i <= b; ++i)
      if (tau(i) - i != shift)
        throw ContractError("block [" + std::to_string(a) + "," + std::to_string(b) +
                            "] is not a constant shift of " + tau.str());
    part.blocks.emplace_back(a, b);
    part.shifts.push_back(shift);
    expect = b + 1;
  }
  if (expect != k + 1)
    throw ContractError("compressive partition does not cover 1.." + std::to_string(k));
  return part;
}

std::vector<CompressivePartition> enumerate_compressive(const Permutation& tau) {
  const int k = tau.order();
  if (k > 62) throw CapError("enumerate_compressive: order too large");
  // adjacent[i] marks that positions i, i+1 can share a block.
  std::vector<char> adjacent(static_cast<size_t>(k), 0);
  for (int i = 1; i < k; ++i) adjacent[static_cast<size_t>(i) - 1] = tau(i + 1) == tau(i) + 1;

  std::vector<CompressivePartition> out;
  const std::uint64_t combos = k >= 1 ? (std::uint64_t{1} << (k - 1)) : 1;
  for (std::uint64_t cut = 0; cut < combos; ++cut) {
    // bit i set = boundary between positions i+1 and i+2
    bool ok = true;
    for (int i = 0; i < k - 1 && ok; ++i)
      if (!(cut & (std::uint64_t{1} << i)) && !adjacent[static_cast<size_t>(i)]) ok = false;
    if (!ok) continue;
    CompressivePartition part;
    int start = 1;
    for (int i = 1; i <= k; ++i) {
      const bool boundary = i == k || (cut & (std::uint64_t{1} << (i - 1)));
      if (boundary) {
        part.blocks.emplace_back(start, i);
        part.shifts.push_back(tau(start) - start);
        start = i + 1;
      }
    }
    out.push_back(std::move(part));
  }
  return out;
}

Permutation quotient(const Permutation& tau, const CompressivePartition& part) {
  make_compressive(tau, part.blocks);  // revalidate: quotient of a non-member is undefined
  std::vector<int> reps;
  reps.reserve(part.blocks.size());
  for (auto [a, b] : part.blocks) {
    (void)b;
    reps.push_back(tau(a));
  }
  return pattern_of(reps);
}

}  // namespace permlab
