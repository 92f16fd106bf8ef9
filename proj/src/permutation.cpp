#include "permlab/permutation.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

namespace permlab {
namespace {

// Fenwick tree over values 1..n, uint64 sums.
class Fenwick {
 public:
  explicit Fenwick(int n) : n_(n), t_(static_cast<size_t>(n) + 1, 0) {}
  void add(int i, std::uint64_t d) {
    for (; i <= n_; i += i & -i) t_[static_cast<size_t>(i)] += d;
  }
  std::uint64_t prefix(int i) const {  // sum over 1..i
    std::uint64_t s = 0;
    for (; i > 0; i -= i & -i) s += t_[static_cast<size_t>(i)];
    return s;
  }

 private:
  int n_;
  std::vector<std::uint64_t> t_;
};

}  // namespace

Permutation::Permutation(std::vector<int> one_line) : v_(std::move(one_line)) {
  const int n = static_cast<int>(v_.size());
  if (n == 0) throw ParseError("permutation must be non-empty");
  std::vector<char> seen(static_cast<size_t>(n) + 1, 0);
  for (int x : v_) {
    if (x < 1 || x > n)
      throw ParseError("permutation value " + std::to_string(x) +
                       " out of range 1.." + std::to_string(n));
    if (seen[static_cast<size_t>(x)])
      throw ParseError("permutation repeats value " + std::to_string(x));
    seen[static_cast<size_t>(x)] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  return Permutation(std::move(v));
}

Permutation Permutation::reversal(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = n - i;
  return Permutation(std::move(v));
}

Permutation Permutation::parse(const std::string& text) {
  std::vector<int> vals;
  size_t pos = 0;
  int index = 1;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string tok = text.substr(pos, comma - pos);
    // trim spaces
    size_t a = tok.find_first_not_of(" \t");
    size_t b = tok.find_last_not_of(" \t");
    tok = (a == std::string::npos) ? "" : tok.substr(a, b - a + 1);
    if (tok.empty())
      throw ParseError("empty token at position " + std::to_string(index) +
                       " in permutation \"" + text + "\"");
    size_t used = 0;
    int val = 0;
    try {
      val = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw ParseError("bad token \"" + tok + "\" at position " +
                       std::to_string(index) + " in permutation string");
    vals.push_back(val);
    ++index;
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return Permutation(std::move(vals));
}

std::string Permutation::str() const {
  std::string out;
  for (size_t i = 0; i < v_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v_[i]);
  }
  return out;
}

Permutation pattern_of(std::span<const int> values) {
  const int k = static_cast<int>(values.size());
  std::vector<int> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return values[static_cast<size_t>(a)] < values[static_cast<size_t>(b)]; });
  std::vector<int> out(static_cast<size_t>(k));
  for (int r = 0; r < k; ++r) out[static_cast<size_t>(idx[static_cast<size_t>(r)])] = r + 1;
  return Permutation(std::move(out));
}

std::vector<std::pair<int, int>> inversions(const Permutation& s) {
  std::vector<std::pair<int, int>> out;
  const int n = s.order();
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (s(i) > s(j)) out.emplace_back(i, j);
  return out;
}

std::uint64_t inversion_count(const Permutation& s) {
  const int n = s.order();
  Fenwick fw(n);
  std::uint64_t total = 0;
  for (int i = 1; i <= n; ++i) {
    // values already placed that are greater than s(i)
    total += fw.prefix(n) - fw.prefix(s(i));
    fw.add(s(i), 1);
  }
  return total;
}

bool is_indecomposable(const Permutation& s) {
  const int n = s.order();
  int maxv = 0;
  for (int i = 1; i < n; ++i) {
    maxv = std::max(maxv, s(i));
    if (maxv == i) return false;  // prefix [i] maps onto [i]
  }
  return true;
}

bool is_simple(const Permutation& s) {
  const int n = s.order();
  for (int a = 1; a <= n; ++a) {
    int lo = s(a), hi = s(a);
    for (int b = a + 1; b <= n; ++b) {
      lo = std::min(lo, s(b));
      hi = std::max(hi, s(b));
      if (b - a == n - 1) break;  // the full interval [1,n] is allowed
      if (hi - lo == b - a) return false;
    }
  }
  return true;
}

bool is_thorough(const Permutation& s) {
  for (int i = 1; i < s.order(); ++i)
    if (s(i + 1) == s(i) + 1) return false;
  return true;
}

bool dominates(const Permutation& b, const Permutation& a) {
  const int n = a.order();
  if (b.order() != n) return false;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (a(i) > a(j) && b(i) < b(j)) return false;
  return true;
}

Permutation random_permutation(int n, Rng& rng) {
  std::vector<int> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
  }
  return Permutation(std::move(v));
}

bool canonical_less(const Permutation& a, const Permutation& b) {
  const std::uint64_t ia = inversion_count(a), ib = inversion_count(b);
  if (ia != ib) return ia < ib;
  if (a.order() != b.order()) return a.order() < b.order();
  return a.values() < b.values();
}

std::vector<Permutation> enumerate_patterns(int max_order, PatternClass cls,
                                            bool include_trivial, int cap) {
  if (max_order < 1) throw ContractError("enumerate_patterns: order must be >= 1");
  if (max_order > cap)
    throw CapError("enumerate_patterns: order " + std::to_string(max_order) +
                   " exceeds enumeration cap " + std::to_string(cap));
  auto keep = [&](const Permutation& p) {
    switch (cls) {
      case PatternClass::All: return true;
      case PatternClass::Indecomposable: return is_indecomposable(p);
      case PatternClass::Simple: return is_simple(p);
      case PatternClass::Thorough: return is_thorough(p);
    }
    return false;
  };
  std::vector<Permutation> out;
  for (int n = include_trivial ? 1 : 2; n <= max_order; ++n) {
    std::vector<int> v(static_cast<size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    do {
      Permutation p(v);
      if (keep(p)) out.push_back(std::move(p));
    } while (std::next_permutation(v.begin(), v.end()));
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<Permutation> canonical_pattern_list(int q, int cap) {
  return enumerate_patterns(q, PatternClass::Indecomposable, false, cap);
}

UniformStats sample_uniform_statistics(int n, std::uint64_t samples,
                                       std::uint64_t seed, int threads) {
  if (n < 1) throw ContractError("sample_uniform_statistics: n must be >= 1");
  constexpr std::uint64_t kShardSize = 1 << 12;
  const std::uint64_t shards = (samples + kShardSize - 1) / kShardSize;
  struct Tally {
    std::uint64_t indec = 0, simple = 0;
  };
  std::vector<Tally> parts(static_cast<size_t>(shards));
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::uint64_t shard = next.fetch_add(1);
      if (shard >= shards) return;
      const std::uint64_t lo = shard * kShardSize;
      const std::uint64_t count = std::min(kShardSize, samples - lo);
      Rng rng(Rng::derive(seed, shard));
      Tally t;
      for (std::uint64_t s = 0; s < count; ++s) {
        Permutation p = random_permutation(n, rng);
        if (is_indecomposable(p)) ++t.indec;
        if (is_simple(p)) ++t.simple;
      }
      parts[static_cast<size_t>(shard)] = t;
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  Tally sum;
  for (const auto& t : parts) {
    sum.indec += t.indec;
    sum.simple += t.simple;
  }
  UniformStats out;
  out.samples = samples;
  if (samples > 0) {
    out.fraction_indecomposable =
        static_cast<double>(sum.indec) / static_cast<double>(samples);
    out.fraction_simple =
        static_cast<double>(sum.simple) / static_cast<double>(samples);
  }
  return out;
}

}  // namespace permlab
