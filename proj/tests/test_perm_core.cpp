#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "permlab/pattern_count.hpp"
#include "permlab/permutation.hpp"
#include "permlab/rational.hpp"
#include "permlab/rng.hpp"

using namespace permlab;

namespace {

std::vector<Permutation> all_of_order(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), 1);
  std::vector<Permutation> out;
  do {
    out.emplace_back(v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

}  // namespace

TEST_SUITE("perm-core") {

TEST_CASE("parse round-trips str") {
  for (const char* text : {"1", "2,1", "2,4,1,3", "10,9,8,7,6,5,4,3,2,1"}) {
    const auto p = Permutation::parse(text);
    CHECK(p.str() == text);
    CHECK(Permutation::parse(p.str()) == p);
  }
  CHECK(Permutation::parse(" 2 , 1 ") == Permutation::parse("2,1"));
}

TEST_CASE("parse rejects bad input") {
  CHECK_THROWS_AS(Permutation::parse(""), ParseError);
  CHECK_THROWS_AS(Permutation::parse("1,2,2"), ParseError);
  CHECK_THROWS_AS(Permutation::parse("1,3"), ParseError);
  CHECK_THROWS_AS(Permutation::parse("0,1"), ParseError);
  CHECK_THROWS_AS(Permutation::parse("2,x,1"), ParseError);
  CHECK_THROWS_AS(Permutation::parse("1,,2"), ParseError);
  CHECK_THROWS_AS(Permutation::parse("1.5,2"), ParseError);
  CHECK_THROWS_AS(Permutation(std::vector<int>{}), ParseError);
}

TEST_CASE("identity and reversal") {
  CHECK(Permutation::identity(4).str() == "1,2,3,4");
  CHECK(Permutation::reversal(4).str() == "4,3,2,1");
  CHECK(Permutation::identity(1) == Permutation::reversal(1));
}

TEST_CASE("pattern_of relabels values") {
  const std::vector<int> vals{42, -7, 13};
  CHECK(pattern_of(vals) == Permutation::parse("3,1,2"));
  const std::vector<int> single{99};
  CHECK(pattern_of(single) == Permutation::identity(1));
}

TEST_CASE("inversions match the quadratic definition") {
  Rng rng(11);
  for (int n : {1, 2, 5, 30, 200}) {
    const auto p = random_permutation(n, rng);
    const auto inv = inversions(p);
    CHECK(inv == oracle::inversions_of(p));
    CHECK(inversion_count(p) == inv.size());
  }
  CHECK(inversion_count(Permutation::reversal(100)) == 100ull * 99 / 2);
}

TEST_CASE("class predicates agree with enumeration oracles") {
  for (int n = 1; n <= 6; ++n)
    for (const auto& p : all_of_order(n)) {
      CHECK(is_indecomposable(p) == oracle::indecomposable(p));
      CHECK(is_simple(p) == oracle::simple(p));
      CHECK(is_thorough(p) == oracle::thorough(p));
    }
}

TEST_CASE("indecomposable and simple counts") {
  const std::vector<int> indec{1, 1, 3, 13, 71, 461};
  const std::vector<int> simple{1, 2, 0, 2, 6, 46};
  for (int n = 1; n <= 6; ++n) {
    int ci = 0, cs = 0;
    for (const auto& p : all_of_order(n)) {
      ci += is_indecomposable(p);
      cs += is_simple(p);
    }
    CHECK(ci == indec[static_cast<size_t>(n) - 1]);
    CHECK(cs == simple[static_cast<size_t>(n) - 1]);
  }
}

TEST_CASE("thorough does not imply indecomposable") {
  const auto p = Permutation::parse("2,1,4,3");
  CHECK(is_thorough(p));
  CHECK_FALSE(is_indecomposable(p));
  CHECK(is_thorough(Permutation::reversal(5)));
  CHECK(is_indecomposable(Permutation::reversal(5)));
  CHECK_FALSE(is_thorough(Permutation::parse("3,1,2,4,5")));
}

TEST_CASE("dominates is inversion containment at equal order") {
  CHECK(dominates(Permutation::parse("3,2,1"), Permutation::parse("2,1,3")));
  CHECK_FALSE(dominates(Permutation::parse("2,1,3"), Permutation::parse("3,2,1")));
  CHECK_FALSE(dominates(Permutation::parse("2,1"), Permutation::parse("2,1,3")));
  // reflexive, and equivalent to mon > 0 at equal orders
  for (const auto& a : all_of_order(4))
    for (const auto& b : all_of_order(4))
      CHECK(dominates(b, a) == (oracle::mon(a, b) > 0));
}

TEST_CASE("canonical order and pattern lists") {
  CHECK(canonical_less(Permutation::parse("2,1"), Permutation::parse("3,2,1")));
  CHECK(canonical_less(Permutation::parse("2,3,1"), Permutation::parse("3,1,2")));

  const auto q3 = canonical_pattern_list(3);
  REQUIRE(q3.size() == 4);
  CHECK(q3[0] == Permutation::parse("2,1"));
  CHECK(q3[1] == Permutation::parse("2,3,1"));
  CHECK(q3[2] == Permutation::parse("3,1,2"));
  CHECK(q3[3] == Permutation::parse("3,2,1"));

  CHECK(canonical_pattern_list(2).size() == 1);
  CHECK(canonical_pattern_list(4).size() == 17);

  // canonical order: inversion count, then order, then lexicographic
  const auto all4 = enumerate_patterns(4, PatternClass::All, true);
  for (size_t i = 1; i < all4.size(); ++i) CHECK(canonical_less(all4[i - 1], all4[i]));
}

TEST_CASE("enumeration cap") {
  CHECK_THROWS_AS(enumerate_patterns(9, PatternClass::All), CapError);
  CHECK_THROWS_AS(canonical_pattern_list(kEnumerationCap + 1), CapError);
  CHECK_NOTHROW(canonical_pattern_list(2));
}

TEST_CASE("enumerate_patterns filters by class") {
  const auto thorough4 = enumerate_patterns(4, PatternClass::Thorough, false);
  for (const auto& p : thorough4) {
    CHECK(is_thorough(p));
    CHECK(p.order() >= 2);
  }
  const auto simple5 = enumerate_patterns(5, PatternClass::Simple, false);
  const auto count5 =
      std::count_if(simple5.begin(), simple5.end(), [](const auto& p) { return p.order() == 5; });
  CHECK(count5 == 6);
  // include_trivial toggles exactly the order-1 entry
  const auto with = enumerate_patterns(3, PatternClass::All, true);
  const auto without = enumerate_patterns(3, PatternClass::All, false);
  CHECK(with.size() == without.size() + 1);
}

TEST_CASE("counts on a textbook example") {
  const auto c = count_patterns(Permutation::parse("2,1"), Permutation::parse("3,1,2"));
  CHECK(c.occ == 2);
  CHECK(c.mon == 2);
  CHECK(c.hom == 2);
}

TEST_CASE("count triple agrees with oracles on random pairs") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(4));
    const int n = k + static_cast<int>(rng.below(5));
    const auto pat = random_permutation(k, rng);
    const auto host = random_permutation(n, rng);
    const auto c = count_patterns(pat, host);
    CHECK(c.occ == oracle::occ(pat, host));
    CHECK(c.mon == oracle::mon(pat, host));
    CHECK(c.hom == oracle::hom(pat, host));
    CHECK(c.occ <= c.mon);
    CHECK(c.mon <= c.hom);
  }
}

TEST_CASE("pattern longer than host counts zero") {
  const auto pat = Permutation::parse("2,1,3");
  const auto host = Permutation::parse("2,1");
  const auto c = count_patterns(pat, host);
  CHECK(c.occ == 0);
  CHECK(c.mon == 0);
  // weak tuples can still land: (1,2,2) realizes the lone inversion
  CHECK(c.hom == 1);
  CHECK(density(pat, host) == 0);
  CHECK(density_mon(pat, host) == 0);
  // but an extra inversion cannot fit into a host of order two
  CHECK(count_patterns(Permutation::parse("3,2,1"), host).hom == 0);
}

TEST_CASE("hom keeps its literal normalization") {
  // weak tuples of the trivial pattern hit every position
  const auto host = Permutation::parse("3,1,2");
  CHECK(count_homomorphisms(Permutation::identity(1), host) == 3);
  // hom density of 2,1 in 2,1: one strict tuple out of binom(3,2)
  CHECK(density_hom(Permutation::parse("2,1"), Permutation::parse("2,1")) == Rat(1, 3));
}

TEST_CASE("for_each_occurrence visits increasing tuples of the right pattern") {
  const auto pat = Permutation::parse("2,1");
  const auto host = Permutation::parse("3,1,2");
  std::vector<std::vector<int>> seen;
  for_each_occurrence(pat, host, [&](std::span<const int> idx) {
    seen.emplace_back(idx.begin(), idx.end());
  });
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == std::vector<int>{1, 2});
  CHECK(seen[1] == std::vector<int>{1, 3});
}

TEST_CASE("count_descending equals the generic count") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6 + static_cast<int>(rng.below(10));
    const auto host = random_permutation(n, rng);
    for (int k = 1; k <= 5; ++k)
      CHECK(count_descending(k, host) == count_occurrences(Permutation::reversal(k), host));
  }
  CHECK(count_descending(3, Permutation::reversal(1000)) ==
        1000ull * 999 * 998 / 6);
  CHECK_THROWS_AS(count_descending(30, Permutation::reversal(100)), CapError);
}

TEST_CASE("order3_profile sums to binom(n,3) and matches direct counts") {
  Rng rng(17);
  const auto pats = all_of_order(3);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(40));
    const auto host = random_permutation(n, rng);
    const auto prof = order3_profile(host);
    std::uint64_t total = 0;
    for (size_t i = 0; i < pats.size(); ++i) {
      CHECK(prof[i] == count_occurrences(pats[i], host));
      total += prof[i];
    }
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    CHECK(total == un * (un - 1) * (un - 2) / 6);
  }
}

TEST_CASE("mon and hom densities approach each other") {
  // hom admits repeats; their share vanishes at large order
  Rng rng(19);
  const auto host = random_permutation(200, rng);
  for (const auto& pat : all_of_order(3)) {
    const double gap =
        rat_double(density_mon(pat, host)) - rat_double(density_hom(pat, host));
    CHECK(std::abs(gap) < 0.05);
  }
}

TEST_CASE("uniform statistics are deterministic and thread independent") {
  const auto a = sample_uniform_statistics(30, 20000, 99, 1);
  const auto b = sample_uniform_statistics(30, 20000, 99, 4);
  CHECK(a.samples == b.samples);
  CHECK(a.fraction_indecomposable == b.fraction_indecomposable);
  CHECK(a.fraction_simple == b.fraction_simple);
  CHECK(a.samples == 20000);
}

TEST_CASE("uniform statistics edge orders") {
  const auto one = sample_uniform_statistics(1, 1000, 5);
  CHECK(one.fraction_indecomposable == 1.0);
  CHECK(one.fraction_simple == 1.0);
  CHECK_THROWS_AS(sample_uniform_statistics(0, 10, 5), ContractError);
}

TEST_CASE("random_permutation is roughly uniform") {
  Rng rng(23);
  std::map<std::string, int> freq;
  const int draws = 6000;
  for (int i = 0; i < draws; ++i) ++freq[random_permutation(3, rng).str()];
  CHECK(freq.size() == 6);
  for (const auto& [key, count] : freq) {
    CHECK(count > draws / 6 - 200);
    CHECK(count < draws / 6 + 200);
  }
}

}  // TEST_SUITE
