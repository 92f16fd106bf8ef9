#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "corpus.hpp"
#include "permlab/param_testing.hpp"
#include "permlab/pattern_count.hpp"

using namespace permlab;

namespace {

Permutation pp(const std::string& s) { return Permutation::parse(s); }

Rat rabs(Rat x) { return x < 0 ? -x : x; }

Permutation random_perm(int n, Rng& rng) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i + 1;
  for (int i = n - 1; i > 0; --i) {
    const auto j = rng.below(static_cast<std::uint64_t>(i) + 1);
    std::swap(v[static_cast<size_t>(i)], v[j]);
  }
  return Permutation(v);
}

}  // namespace

TEST_SUITE("param-testing") {

TEST_CASE("single-term parameter is a plain density") {
  const auto p = build_oscillating_param(2, 1, 1729);
  REQUIRE(p.terms() == 1);
  CHECK(p.taus[0] == pp("2,1"));
  CHECK(p.alphas[0] == Rat(1, 4));
  CHECK(p.pairs[0].gamma == Rat(1));
  CHECK(evaluate_param(p, pp("3,1,2")) == Rat(1, 6));
  CHECK(evaluate_param(p, Permutation::identity(1)) == Rat(0));
  p.validate();
}

TEST_CASE("two-term build is exact") {
  const auto p = build_oscillating_param(2, 2, 1729);
  REQUIRE(p.terms() == 2);
  CHECK(p.taus[0] == pp("2,1"));
  CHECK(p.taus[1] == pp("3,2,1"));
  CHECK(p.alphas == std::vector<Rat>{Rat(1, 4), Rat(1, 32)});
  // term 1: the reverse and identity permutons, gap one
  CHECK(p.pairs[0].gamma == Rat(1));
  CHECK(p.pairs[0].match_residual == 0.0);
  CHECK(exact_density(pp("2,1"), p.pairs[0].phi) == Rat(1));
  CHECK(exact_density(pp("2,1"), p.pairs[0].phi_prime) == Rat(0));
  // term 2: the closed-form step-up pair, gap exactly 1/8 with a zero residual
  CHECK(p.pairs[1].gamma == Rat(1, 8));
  CHECK(p.pairs[1].match_residual == 0.0);
  CHECK(exact_density(pp("2,1"), p.pairs[1].phi) ==
        exact_density(pp("2,1"), p.pairs[1].phi_prime));
  CHECK(exact_density(pp("3,2,1"), p.pairs[1].phi) -
            exact_density(pp("3,2,1"), p.pairs[1].phi_prime) ==
        Rat(1, 8));
  CHECK(evaluate_param(p, pp("3,2,1")) == Rat(9, 32));
  p.validate();
}

TEST_CASE("three-term build satisfies both coefficient invariants") {
  const auto p = build_oscillating_param(2, 3, 1729);
  REQUIRE(p.terms() == 3);
  CHECK(p.taus[2] == pp("4,3,2,1"));
  CHECK(p.alphas == std::vector<Rat>{Rat(1, 4), Rat(1, 32), Rat(1, 2048)});
  CHECK(p.pairs[2].gamma == Rat(3, 20000));
  CHECK(p.pairs[2].match_residual <= 1e-6);
  CHECK(tail_alpha_sum(p, 1) == Rat(1, 32) + Rat(1, 2048));
  CHECK(tail_alpha_sum(p, 2) == Rat(1, 2048));
  CHECK(tail_alpha_sum(p, 3) == Rat(0));
  CHECK(tail_alpha_sum(p, 1) < p.alphas[0] * p.pairs[0].gamma / 4);
  CHECK(tail_alpha_sum(p, 2) < p.alphas[1] * p.pairs[1].gamma / 4);
  CHECK_THROWS_AS(tail_alpha_sum(p, 0), ContractError);
  CHECK_THROWS_AS(tail_alpha_sum(p, 4), ContractError);
  Rat total = 0;
  for (const auto& a : p.alphas) total += a;
  CHECK(total < Rat(1, 2));
  p.validate();
}

TEST_CASE("the ladder can start higher up") {
  const auto p = build_oscillating_param(3, 2, 1729);
  CHECK(p.taus == std::vector<Permutation>{pp("3,2,1"), pp("4,3,2,1")});
  CHECK(p.alphas == std::vector<Rat>{Rat(1, 4), Rat(1, 32)});
  CHECK(p.pairs[0].gamma == Rat(1));
  CHECK(p.pairs[1].gamma == Rat(3, 20000));
  p.validate();

  const auto single = build_oscillating_param(6, 1, 1729);
  CHECK(single.taus[0] == pp("6,5,4,3,2,1"));
  CHECK(single.pairs[0].gamma == Rat(1));
  single.validate();
}

TEST_CASE("build rejects bad shapes") {
  CHECK_THROWS_AS(build_oscillating_param(2, 0, 1), ContractError);
  CHECK_THROWS_AS(build_oscillating_param(1, 1, 1), ContractError);
  CHECK_THROWS_AS(build_oscillating_param(2, 6, 1), ContractError);
  CHECK_THROWS_AS(build_oscillating_param(7, 1, 1), ContractError);
}

TEST_CASE("json round trip and invariant enforcement on load") {
  const auto p = build_oscillating_param(2, 3, 1729);
  const auto j = p.to_json();
  CHECK(OscillatingParam::from_json(j).to_json().dump() == j.dump());

  auto fat = j;
  fat["alphas"][0] = "1/2";  // pushes the sum past 1/2
  CHECK_THROWS_AS(OscillatingParam::from_json(fat), ContractError);
  auto tail = j;
  tail["alphas"][2] = "1/16";  // breaks the tail bound after term 2
  CHECK_THROWS_AS(OscillatingParam::from_json(tail), ContractError);
  auto gam = j;
  gam["pairs"][1]["gamma"] = "1/4";  // disagrees with the stored permutons
  CHECK_THROWS_AS(OscillatingParam::from_json(gam), ContractError);
  auto chopped = j;
  chopped.erase("pairs");
  CHECK_THROWS_AS(OscillatingParam::from_json(chopped), ParseError);
}

TEST_CASE("evaluation is the exact weighted density sum") {
  const auto p = build_oscillating_param(2, 3, 1729);
  const auto all_desc = pp("4,3,2,1");
  CHECK(term_densities(p, all_desc) == std::vector<Rat>{Rat(1), Rat(1), Rat(1)});
  CHECK(evaluate_param(p, all_desc) == Rat(577, 2048));

  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sigma = random_perm(2 + static_cast<int>(rng.below(8)), rng);
    const auto td = term_densities(p, sigma);
    Rat expect = 0;
    for (size_t i = 0; i < td.size(); ++i) {
      CHECK(td[i] == density(p.taus[i], sigma));
      expect += p.alphas[i] * td[i];
    }
    const Rat f = evaluate_param(p, sigma);
    CHECK(f == expect);
    CHECK(f >= Rat(0));
    CHECK(f < Rat(1, 2));
  }
}

TEST_CASE("close densities force close parameter values") {
  const auto p = build_oscillating_param(2, 3, 1729);
  const int k = 2;
  const Rat tail = tail_alpha_sum(p, k);
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 30 + static_cast<int>(rng.below(11));
    const auto sigma = random_perm(n, rng);
    const auto pi = random_perm(n, rng);
    Rat delta = 0;
    for (int i = 0; i < k; ++i)
      delta = std::max(delta, rabs(density(p.taus[static_cast<size_t>(i)], sigma) -
                                      density(p.taus[static_cast<size_t>(i)], pi)));
    const Rat gap = rabs(evaluate_param(p, sigma) - evaluate_param(p, pi));
    if (delta > 0)
      CHECK(gap < delta / 2 + tail);
    else
      CHECK(gap <= tail);
  }
}

TEST_CASE("tester is exact when the subsample is everything") {
  const auto p = build_oscillating_param(2, 1, 1729);
  const auto sigma = sample_permutation(corpus::stepup_a(), 12, 5);
  TesterConfig cfg;
  cfg.epsilon = 0.01;
  cfg.n0 = 12;
  cfg.samples = 40;
  cfg.seed = 9;
  const auto rep = estimate_by_subsampling(p, sigma, cfg);
  CHECK(rep.n == 12);
  CHECK(rep.n0 == 12);
  CHECK(rep.failures == 0);
  CHECK(rep.error_rate == 0.0);
  CHECK(rep.mean_abs_dev == 0.0);
  CHECK(rep.mean_estimate == doctest::Approx(rat_double(evaluate_param(p, sigma))).epsilon(1e-12));
}

TEST_CASE("tester enforces its contracts") {
  const auto p = build_oscillating_param(2, 2, 1729);  // patterns up to order 3
  const auto sigma = sample_permutation(Permuton::uniform(), 20, 3);
  TesterConfig cfg;
  cfg.n0 = 10;
  cfg.samples = 5;

  auto bad = cfg;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(estimate_by_subsampling(p, sigma, bad), ContractError);
  bad = cfg;
  bad.n0 = 2;  // below the largest pattern order
  CHECK_THROWS_AS(estimate_by_subsampling(p, sigma, bad), ContractError);
  bad = cfg;
  bad.n0 = 21;  // sigma too short
  CHECK_THROWS_AS(estimate_by_subsampling(p, sigma, bad), ContractError);
  bad = cfg;
  bad.samples = 0;
  CHECK_THROWS_AS(estimate_by_subsampling(p, sigma, bad), ContractError);
  CHECK_NOTHROW(estimate_by_subsampling(p, sigma, cfg));
}

TEST_CASE("subsampling concentrates at scale") {
  const auto p = build_oscillating_param(2, 1, 1729);
  const auto sigma = sample_permutation(Permuton::uniform(), 2000, 42);
  TesterConfig cfg;
  cfg.epsilon = 0.05;
  cfg.n0 = 100;
  cfg.samples = 200;
  cfg.seed = 1;
  const auto rep = estimate_by_subsampling(p, sigma, cfg);
  CHECK(rep.error_rate < 0.05);
}

TEST_CASE("error shrinks as the subsample order grows") {
  const auto p = build_oscillating_param(2, 1, 1729);
  const auto sigma = sample_permutation(Permuton::uniform(), 2000, 42);
  double er_sum[3] = {0, 0, 0};
  const int n0s[3] = {20, 50, 100};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double prev_dev = 1e9;
    for (int i = 0; i < 3; ++i) {
      TesterConfig cfg;
      cfg.epsilon = 0.05;
      cfg.n0 = n0s[i];
      cfg.samples = 200;
      cfg.seed = seed;
      const auto rep = estimate_by_subsampling(p, sigma, cfg);
      er_sum[i] += rep.error_rate;
      CHECK(rep.mean_abs_dev < prev_dev);
      prev_dev = rep.mean_abs_dev;
    }
  }
  CHECK(er_sum[0] >= er_sum[1]);
  CHECK(er_sum[1] >= er_sum[2]);
}

TEST_CASE("repetition tightens the mean estimate") {
  const auto p = build_oscillating_param(2, 1, 1729);
  const auto sigma = sample_permutation(Permuton::uniform(), 300, 8);
  auto spread = [&](std::uint64_t samples) {
    double mean = 0.0, m2 = 0.0;
    const int reps = 8;
    for (int i = 0; i < reps; ++i) {
      TesterConfig cfg;
      cfg.epsilon = 0.05;
      cfg.n0 = 20;
      cfg.samples = samples;
      cfg.seed = 100 + static_cast<std::uint64_t>(i);
      const double e = estimate_by_subsampling(p, sigma, cfg).mean_estimate;
      const double d = e - mean;
      mean += d / (i + 1);
      m2 += d * (e - mean);
    }
    return std::sqrt(m2 / (reps - 1));
  };
  const double sd_small = spread(100);
  const double sd_large = spread(1600);
  CHECK(sd_large > 0.0);
  CHECK(sd_large < sd_small);
}

TEST_CASE("forcing experiment separates while low orders converge") {
  const auto p = build_oscillating_param(2, 3, 1729);
  const auto rep = forcing_failure_experiment(p, 2, {60, 30}, 7, 6);
  CHECK(rep.k == 2);
  CHECK(rep.low_order_cap == 2);
  CHECK(rep.pairs_per_order == 6);
  CHECK(rep.threshold == Rat(1, 1024));
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].order == 30);  // sorted even when given out of order
  CHECK(rep.rows[1].order == 60);
  for (const auto& row : rep.rows) {
    CHECK(row.mean_max_low_gap >= 0.0);
    CHECK(row.mean_max_low_gap <= 1.0);
    CHECK(row.mean_abs_f_gap > Rat(0));
  }
  CHECK(rep.separation_at_largest);
  CHECK(rep.rows[1].mean_abs_f_gap > rep.threshold);
  const auto j = rep.to_json();
  CHECK(j.contains("threshold"));
  CHECK(j.contains("orders"));
}

TEST_CASE("forcing experiment enforces its contracts") {
  const auto p = build_oscillating_param(2, 3, 1729);
  CHECK_THROWS_AS(forcing_failure_experiment(p, 1, {30}, 1, 2), ContractError);
  CHECK_THROWS_AS(forcing_failure_experiment(p, 4, {30}, 1, 2), ContractError);
  CHECK_THROWS_AS(forcing_failure_experiment(p, 2, {}, 1, 2), ContractError);
  CHECK_THROWS_AS(forcing_failure_experiment(p, 2, {30}, 1, 0), ContractError);
  CHECK_THROWS_AS(forcing_failure_experiment(p, 2, {2}, 1, 2), ContractError);
}

TEST_CASE("max low-order gap matches direct enumeration") {
  CHECK(max_low_order_gap(pp("3,1,2"), pp("2,3,1"), 2) == Rat(0));
  CHECK(max_low_order_gap(pp("3,1,2"), pp("2,3,1"), 3) == Rat(1));
  CHECK_THROWS_AS(max_low_order_gap(pp("2,1"), pp("1,2"), 1), ContractError);

  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_perm(8, rng);
    const auto b = random_perm(8, rng);
    Rat direct = 0;
    for (const auto& rho : enumerate_patterns(4, PatternClass::All, false))
      direct = std::max(direct, rabs(density(rho, a) - density(rho, b)));
    CHECK(max_low_order_gap(a, b, 4) == direct);
  }
}

}  // TEST_SUITE
