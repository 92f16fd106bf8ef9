#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "permlab/permuton.hpp"

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

TEST_SUITE("permuton") {

TEST_CASE("json round trips are byte stable") {
  for (const auto& [name, phi] : corpus::all()) {
    CAPTURE(name);
    const auto j = phi.to_json();
    CHECK(Permuton::from_json(j).to_json().dump() == j.dump());
    CHECK(Permuton::from_json_text(j.dump()).to_json().dump() == j.dump());
  }
}

TEST_CASE("json rejects malformed input") {
  CHECK_THROWS_AS(Permuton::from_json_text("not json"), ParseError);
  CHECK_THROWS_AS(Permuton::from_json_text("[]"), ParseError);
  CHECK_THROWS_AS(Permuton::from_json_text(R"({"type":"wavelet"})"), ParseError);
  CHECK_THROWS_AS(Permuton::from_json_text(R"({"type":"stepup","weights":["1/2"]})"),
                  ParseError);
  CHECK_THROWS_AS(
      Permuton::from_json_text(R"({"type":"stepup","sigma":"1,1","weights":["1/2","1/2"]})"),
      ParseError);
  CHECK_THROWS_AS(
      Permuton::from_json_text(R"({"type":"stepup","sigma":"2,1","weights":"1/2"})"),
      ParseError);
  CHECK_THROWS_AS(
      Permuton::from_json_text(R"({"type":"stepup","sigma":"2,1","weights":["-1/2","1/2"]})"),
      ParseError);
  CHECK_THROWS_AS(Permuton::from_json_text(R"({"type":"dsum","parts":[]})"), ParseError);
  CHECK_THROWS_AS(Permuton::from_json_text(R"({"type":"dsum","parts":[{"weight":"1/2"}]})"),
                  ParseError);
}

TEST_CASE("json nesting beyond the depth cap is rejected") {
  std::string txt = R"({"type":"uniform"})";
  for (int d = 0; d < kPermutonDepthCap + 2; ++d)
    txt = R"({"type":"dsum","parts":[{"weight":"1/2","permuton":)" + txt + "}]}";
  CHECK_THROWS_AS(Permuton::from_json_text(txt), ParseError);
}

TEST_CASE("exact densities sum to one at each order") {
  for (const auto& [name, phi] : corpus::all()) {
    CAPTURE(name);
    for (int k = 2; k <= 3; ++k) {
      Rat total = 0;
      for (const auto& tau : all_of_order(k)) total += exact_density(tau, phi);
      CHECK(total == Rat(1));
    }
    CHECK(exact_density(Permutation::identity(1), phi) == Rat(1));
  }
}

TEST_CASE("step-up densities match hand-computed values") {
  // inversion density of a step-up is twice the sum of w_i w_j over
  // descending segment pairs
  CHECK(exact_density(Permutation::parse("2,1"), corpus::stepup_a()) == Rat(7, 24));
  CHECK(exact_density(Permutation::parse("2,1"), corpus::stepup_b()) == Rat(1, 2));
  CHECK(exact_density(Permutation::parse("2,1"), corpus::stepup_c()) == Rat(1, 2));
  // all three points in pairwise distinct descending segments
  CHECK(exact_density(Permutation::parse("3,2,1"), corpus::stepup_b()) == Rat(1, 8));
  CHECK(exact_density(Permutation::parse("3,2,1"), corpus::stepup_c()) == Rat(0));

  const auto small = Permuton::stepup(Permutation::parse("2,1"), {Rat(1, 3), Rat(1, 5)});
  CHECK(exact_density(Permutation::parse("2,1"), small) == Rat(2, 15));
  CHECK(exact_density(Permutation::parse("1,2"), small) == Rat(13, 15));

  const auto desc3 =
      Permuton::stepup(Permutation::parse("3,2,1"), {Rat(1, 7), Rat(2, 7), Rat(3, 7)});
  CHECK(exact_density(Permutation::parse("2,1"), desc3) == Rat(22, 49));

  // leftover diagonal mass only feeds ascents
  const auto half = Permuton::stepup(Permutation::parse("2,1"), {Rat(1, 4), Rat(1, 4)});
  CHECK(exact_density(Permutation::parse("2,1"), half) == Rat(1, 8));
  CHECK(exact_density(Permutation::parse("1,2"), half) == Rat(7, 8));
}

TEST_CASE("density_stepup agrees with the tree evaluator") {
  const std::vector<std::string> taus = {"2,1", "2,3,1", "3,1,2", "3,2,1", "2,4,1,3"};
  for (const auto& s : taus) {
    const auto tau = Permutation::parse(s);
    for (const auto& phi : {corpus::stepup_a(), corpus::stepup_b(), corpus::stepup_c()}) {
      const auto& node = std::get<StepUpNode>(phi.node());
      CHECK(density_stepup(tau, node.base, node.weights) == exact_density(tau, phi));
    }
  }
}

TEST_CASE("direct-sum densities match hand-computed values") {
  const auto inv = Permutation::parse("2,1");
  // parts (1/2, two-block step-up) and (1/4, reverse): 1/4 * 1/2 + 1/16 * 1
  CHECK(exact_density(inv, corpus::dsum_leftover()) == Rat(3, 16));
  CHECK(exact_density(Permutation::parse("1,2"), corpus::dsum_leftover()) == Rat(13, 16));
  CHECK(exact_density(Permutation::parse("3,2,1"), corpus::dsum_leftover()) == Rat(1, 64));
  CHECK(exact_density(inv, corpus::nested()) == Rat(13, 144));

  const auto holder = corpus::dsum_leftover();
  const auto& node = std::get<DirectSumNode>(holder.node());
  CHECK(density_dsum(inv, node.parts) == Rat(3, 16));
  CHECK(density_dsum(Permutation::parse("3,2,1"), node.parts) == Rat(1, 64));
}

TEST_CASE("deterministic permutons sit at the density extremes") {
  for (int k = 2; k <= 4; ++k) {
    CHECK(exact_density(Permutation::identity(k), Permuton::identity()) == Rat(1));
    CHECK(exact_density(Permutation::reversal(k), Permuton::reverse()) == Rat(1));
    CHECK(exact_density(Permutation::reversal(k), Permuton::identity()) == Rat(0));
    CHECK(exact_density(Permutation::identity(k), Permuton::reverse()) == Rat(0));
  }
  for (const auto& tau : all_of_order(3))
    CHECK(exact_density(tau, Permuton::uniform()) == Rat(1, 6));
  CHECK(exact_density(Permutation::parse("2,1"), Permuton::uniform()) == Rat(1, 2));
}

TEST_CASE("mon density sums occurrence densities over dominating patterns") {
  const auto phi = corpus::stepup_a();
  CHECK(density_mon_permuton(Permutation::parse("2,1"), phi) ==
        exact_density(Permutation::parse("2,1"), phi));
  CHECK(density_mon_permuton(Permutation::parse("3,2,1"), phi) ==
        exact_density(Permutation::parse("3,2,1"), phi));
  // 231 is dominated-by exactly {231, 321} at order 3
  CHECK(density_mon_permuton(Permutation::parse("2,3,1"), phi) ==
        exact_density(Permutation::parse("2,3,1"), phi) +
            exact_density(Permutation::parse("3,2,1"), phi));
  for (const auto& [name, p] : corpus::all()) {
    CAPTURE(name);
    CHECK(density_mon_permuton(Permutation::parse("3,1,2"), p) >=
          exact_density(Permutation::parse("3,1,2"), p));
  }
}

TEST_CASE("constructor contracts") {
  CHECK_THROWS_AS(Permuton::stepup(Permutation::parse("2,1"), {Rat(2, 3), Rat(2, 3)}),
                  ContractError);
  CHECK_THROWS_AS(Permuton::stepup(Permutation::parse("2,1"), {Rat(0), Rat(1, 2)}),
                  ContractError);
  CHECK_THROWS_AS(Permuton::stepup(Permutation::parse("2,1"), {Rat(-1, 4), Rat(1, 2)}),
                  ContractError);
  CHECK_THROWS_AS(Permuton::stepup(Permutation::parse("2,1"), {Rat(1, 2)}), ContractError);
  CHECK_THROWS_AS(Permuton::dsum({}), ContractError);
  CHECK_THROWS_AS(Permuton::dsum({PermutonPart{Rat(2, 3), Permuton::uniform()},
                                  PermutonPart{Rat(2, 3), Permuton::reverse()}}),
                  ContractError);
}

TEST_CASE("density contracts") {
  const auto base = Permutation::parse("2,1");
  const std::vector<Rat> w = {Rat(1, 2), Rat(1, 2)};
  CHECK_THROWS_AS(density_stepup(Permutation::identity(1), base, w), ContractError);
  CHECK_THROWS_AS(density_stepup(Permutation::parse("1,2"), base, w), ContractError);
  CHECK_THROWS_AS(density_stepup(Permutation::parse("2,1,4,3"), base, w), ContractError);
  CHECK_THROWS_AS(density_stepup(Permutation::parse("2,1"), base, {Rat(1, 2)}),
                  ContractError);
  const auto holder = corpus::dsum_leftover();
  const auto& node = std::get<DirectSumNode>(holder.node());
  CHECK_THROWS_AS(density_dsum(Permutation::identity(1), node.parts), ContractError);
  CHECK_THROWS_AS(density_dsum(Permutation::parse("1,2"), node.parts), ContractError);
  CHECK_THROWS_AS(density_mon_permuton(Permutation::parse("1,2"), corpus::stepup_a()),
                  ContractError);
  CHECK_THROWS_AS(sample_permutation(Permuton::uniform(), 0, 7), ContractError);
}

TEST_CASE("sampling respects deterministic permutons") {
  CHECK(sample_permutation(Permuton::identity(), 6, 11) == Permutation::identity(6));
  CHECK(sample_permutation(Permuton::reverse(), 6, 11) == Permutation::reversal(6));
  CHECK(sample_permutation(Permuton::uniform(), 5, 42) ==
        sample_permutation(Permuton::uniform(), 5, 42));
}

TEST_CASE("uniform sampling is uniform over order three") {
  Rng rng(314159);
  std::map<std::string, int> counts;
  const int trials = 6000;
  for (int i = 0; i < trials; ++i)
    counts[sample_permutation(Permuton::uniform(), 3, rng).str()]++;
  CHECK(counts.size() == 6);
  for (const auto& [s, c] : counts) {
    CAPTURE(s);
    CHECK(c > 1000 - 150);
    CHECK(c < 1000 + 150);
  }
}

TEST_CASE("monte carlo estimates track exact densities") {
  const auto tau = Permutation::parse("2,1");
  const double exact = 7.0 / 24.0;
  const auto est = density_mc(tau, corpus::stepup_a(), 20000, 99);
  CHECK(est.samples == 20000);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.estimate - exact) < 4.0 * est.std_error + 1e-9);

  const auto mon = density_mon_mc(Permutation::parse("2,3,1"), corpus::stepup_a(), 20000, 99);
  const double mon_exact =
      rat_double(density_mon_permuton(Permutation::parse("2,3,1"), corpus::stepup_a()));
  CHECK(std::abs(mon.estimate - mon_exact) < 4.0 * mon.std_error + 1e-9);
}

TEST_CASE("monte carlo is deterministic and thread independent") {
  const auto tau = Permutation::parse("2,3,1");
  const auto phi = corpus::nested();
  const std::uint64_t n = (1u << 12) * 3 + 17;  // straddles shard boundaries
  const auto a = density_mc(tau, phi, n, 5, 1);
  const auto b = density_mc(tau, phi, n, 5, 4);
  const auto c = density_mc(tau, phi, n, 5, 1);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.estimate == c.estimate);
  const auto m1 = density_mon_mc(tau, phi, n, 5, 1);
  const auto m4 = density_mon_mc(tau, phi, n, 5, 4);
  CHECK(m1.estimate == m4.estimate);
}

}  // TEST_SUITE
