#include "permlab/pattern_count.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace permlab {
namespace {

class Fenwick {
 public:
  explicit Fenwick(int n) : n_(n), t_(static_cast<size_t>(n) + 1, 0) {}
  void add(int i, std::uint64_t d) {
    for (; i <= n_; i += i & -i) t_[static_cast<size_t>(i)] += d;
  }
  std::uint64_t prefix(int i) const {
    std::uint64_t s = 0;
    for (; i > 0; i -= i & -i) s += t_[static_cast<size_t>(i)];
    return s;
  }
  void reset() { std::fill(t_.begin(), t_.end(), 0); }

 private:
  int n_;
  std::vector<std::uint64_t> t_;
};

bool is_descending(const Permutation& p) {
  for (int i = 1; i <= p.order(); ++i)
    if (p(i) != p.order() - i + 1) return false;
  return true;
}

// Backtracking over increasing position tuples; each extension is checked
// against the already-placed prefix. `full_order` distinguishes occurrence
// counting (whole relative order) from monomorphism counting (inversions
// only).
std::uint64_t count_increasing_maps(const Permutation& pat, const Permutation& host,
                                    bool full_order) {
  const int k = pat.order(), n = host.order();
  if (k > n) return 0;
  std::vector<int> f(static_cast<size_t>(k) + 1, 0);  // f[t] = chosen position
  std::uint64_t total = 0;
  int t = 1;
  f[1] = 0;
  while (t >= 1) {
    ++f[static_cast<size_t>(t)];
    int p = f[static_cast<size_t>(t)];
    if (p > n - (k - t)) {  // not enough room to finish
      --t;
      continue;
    }
    bool ok = true;
    for (int s = 1; s < t && ok; ++s) {
      const int ps = f[static_cast<size_t>(s)];
      if (full_order) {
        ok = (host(ps) < host(p)) == (pat(s) < pat(t));
      } else if (pat(s) > pat(t)) {
        ok = host(ps) > host(p);
      }
    }
    if (!ok) continue;
    if (t == k) {
      ++total;
    } else {
      ++t;
      f[static_cast<size_t>(t)] = p;  // next position starts above p
    }
  }
  return total;
}

}  // namespace

std::uint64_t count_descending(int k, const Permutation& host) {
  const int n = host.order();
  if (k < 1) throw ContractError("count_descending: k must be >= 1");
  if (k > n) return 0;
  if (k == 1) return static_cast<std::uint64_t>(n);
  if (binomial(static_cast<unsigned>(n), static_cast<unsigned>(k)) >
      BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw CapError("count_descending: count may overflow 64 bits at n=" +
                   std::to_string(n) + ", k=" + std::to_string(k));
  // level[i] = number of strictly decreasing t-tuples ending at position i
  std::vector<std::uint64_t> level(static_cast<size_t>(n), 1);
  Fenwick fw(n);
  for (int t = 2; t <= k; ++t) {
    fw.reset();
    std::uint64_t all = 0;
    std::vector<std::uint64_t> nxt(static_cast<size_t>(n), 0);
    for (int i = 1; i <= n; ++i) {
      // predecessors j < i with host(j) > host(i)
      nxt[static_cast<size_t>(i) - 1] = all - fw.prefix(host(i));
      fw.add(host(i), level[static_cast<size_t>(i) - 1]);
      all += level[static_cast<size_t>(i) - 1];
    }
    level.swap(nxt);
  }
  std::uint64_t total = 0;
  for (auto v : level) total += v;
  return total;
}

std::array<std::uint64_t, 6> order3_profile(const Permutation& host) {
  const int n = host.order();
  std::array<std::uint64_t, 6> out{};  // 123,132,213,231,312,321
  if (n < 3) return out;
  // For each position: counts of smaller/larger values to the left/right.
  std::vector<std::uint64_t> ls(static_cast<size_t>(n)), lg(static_cast<size_t>(n)),
      rs(static_cast<size_t>(n)), rg(static_cast<size_t>(n));
  Fenwick fw(n);
  for (int i = 1; i <= n; ++i) {
    ls[static_cast<size_t>(i) - 1] = fw.prefix(host(i) - 1);
    lg[static_cast<size_t>(i) - 1] = static_cast<std::uint64_t>(i - 1) - ls[static_cast<size_t>(i) - 1];
    fw.add(host(i), 1);
  }
  fw.reset();
  for (int i = n; i >= 1; --i) {
    rs[static_cast<size_t>(i) - 1] = fw.prefix(host(i) - 1);
    rg[static_cast<size_t>(i) - 1] = static_cast<std::uint64_t>(n - i) - rs[static_cast<size_t>(i) - 1];
    fw.add(host(i), 1);
  }
  // Middle-position identities: each triple is classified by what its middle
  // position sees. Mixed classes are split with max-first / min-last sums.
  std::uint64_t asc = 0, desc = 0, minmid = 0, maxmid = 0, maxfirst = 0, minlast = 0;
  for (int i = 0; i < n; ++i) {
    asc += ls[static_cast<size_t>(i)] * rg[static_cast<size_t>(i)];
    desc += lg[static_cast<size_t>(i)] * rs[static_cast<size_t>(i)];
    minmid += lg[static_cast<size_t>(i)] * rg[static_cast<size_t>(i)];   // 213 + 312
    maxmid += ls[static_cast<size_t>(i)] * rs[static_cast<size_t>(i)];   // 231 + 132
    maxfirst += rs[static_cast<size_t>(i)] * (rs[static_cast<size_t>(i)] - 1) / 2;  // 312 + 321
    minlast += lg[static_cast<size_t>(i)] * (lg[static_cast<size_t>(i)] - 1) / 2;   // 231 + 321
  }
  out[0] = asc;
  out[5] = desc;
  out[4] = maxfirst - desc;       // 312
  out[2] = minmid - out[4];       // 213
  out[3] = minlast - desc;        // 231
  out[1] = maxmid - out[3];       // 132
  return out;
}

std::uint64_t count_occurrences(const Permutation& pat, const Permutation& host) {
  const int k = pat.order(), n = host.order();
  if (k > n) return 0;
  if (k == 1) return static_cast<std::uint64_t>(n);
  if (k == 2) {
    const std::uint64_t inv = inversion_count(host);
    return pat(1) == 2 ? inv : static_cast<std::uint64_t>(n) * (n - 1) / 2 - inv;
  }
  if (k == 3) {
    static const std::array<Permutation, 6> kOrder3 = {
        Permutation({1, 2, 3}), Permutation({1, 3, 2}), Permutation({2, 1, 3}),
        Permutation({2, 3, 1}), Permutation({3, 1, 2}), Permutation({3, 2, 1})};
    const auto prof = order3_profile(host);
    for (size_t i = 0; i < 6; ++i)
      if (kOrder3[i] == pat) return prof[i];
  }
  if (is_descending(pat)) return count_descending(k, host);
  return count_increasing_maps(pat, host, /*full_order=*/true);
}

std::uint64_t count_monomorphisms(const Permutation& pat, const Permutation& host) {
  return count_increasing_maps(pat, host, /*full_order=*/false);
}

std::uint64_t count_homomorphisms(const Permutation& pat, const Permutation& host) {
  const int k = pat.order(), n = host.order();
  // Non-decreasing maps [k] -> [n]; repeats allowed, so k > n still admits maps.
  std::vector<int> f(static_cast<size_t>(k) + 1, 0);
  std::uint64_t total = 0;
  int t = 1;
  f[1] = 0;
  while (t >= 1) {
    ++f[static_cast<size_t>(t)];
    int p = f[static_cast<size_t>(t)];
    if (p > n) {
      --t;
      continue;
    }
    bool ok = true;
    for (int s = 1; s < t && ok; ++s)
      if (pat(s) > pat(t)) ok = host(f[static_cast<size_t>(s)]) > host(p);
    if (!ok) continue;
    if (t == k) {
      ++total;
    } else {
      ++t;
      f[static_cast<size_t>(t)] = p - 1;  // next position starts at p (non-decreasing)
    }
  }
  return total;
}

PatternCounts count_patterns(const Permutation& pat, const Permutation& host) {
  PatternCounts c;
  c.occ = count_occurrences(pat, host);
  c.mon = count_monomorphisms(pat, host);
  c.hom = count_homomorphisms(pat, host);
  return c;
}

void for_each_occurrence(const Permutation& pat, const Permutation& host,
                         const std::function<void(std::span<const int>)>& fn) {
  const int k = pat.order(), n = host.order();
  if (k > n) return;
  std::vector<int> f(static_cast<size_t>(k) + 1, 0);
  int t = 1;
  f[1] = 0;
  while (t >= 1) {
    ++f[static_cast<size_t>(t)];
    int p = f[static_cast<size_t>(t)];
    if (p > n - (k - t)) {
      --t;
      continue;
    }
    bool ok = true;
    for (int s = 1; s < t && ok; ++s)
      ok = (host(f[static_cast<size_t>(s)]) < host(p)) == (pat(s) < pat(t));
    if (!ok) continue;
    if (t == k) {
      fn(std::span<const int>(f.data() + 1, static_cast<size_t>(k)));
    } else {
      ++t;
      f[static_cast<size_t>(t)] = p;
    }
  }
}

Rat density(const Permutation& pat, const Permutation& host) {
  const unsigned k = static_cast<unsigned>(pat.order());
  const unsigned n = static_cast<unsigned>(host.order());
  if (k > n) return Rat(0);
  return Rat(BigInt(count_occurrences(pat, host)), binomial(n, k));
}

Rat density_mon(const Permutation& pat, const Permutation& host) {
  const unsigned k = static_cast<unsigned>(pat.order());
  const unsigned n = static_cast<unsigned>(host.order());
  if (k > n) return Rat(0);
  return Rat(BigInt(count_monomorphisms(pat, host)), binomial(n, k));
}

Rat density_hom(const Permutation& pat, const Permutation& host) {
  const unsigned k = static_cast<unsigned>(pat.order());
  const unsigned n = static_cast<unsigned>(host.order());
  return Rat(BigInt(count_homomorphisms(pat, host)), binomial(n + k - 1, k));
}

}  // namespace permlab
