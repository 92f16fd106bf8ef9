#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permlab/permutation.hpp"
#include "permlab/permuton.hpp"
#include "permlab/rational.hpp"

#include <json.hpp>

namespace permlab {

// A pair of permutons that agree (up to match_residual) on every non-trivial
// pattern density below some order, while differing by exactly gamma on one
// designated pattern of the next order.
struct PermutonPair {
  Permuton phi = Permuton::uniform();
  Permuton phi_prime = Permuton::uniform();
  Rat gamma;              // exact |t(tau, phi) - t(tau, phi_prime)|
  double match_residual = 0.0;  // max density gap over the matched orders
};

// f(sigma) = sum_i alpha_i * t(tau_i, sigma), with pattern orders strictly
// increasing and coefficients decaying fast enough that each term's
// oscillation survives everything after it:
//   sum_i alpha_i < 1/2
//   sum_{i>k} alpha_i < alpha_k * gamma_k / 4   for every k < K
// pairs[k] realizes gamma_k for taus[k]; its permutons agree on all
// non-trivial densities of order <= |taus[k-1]|.
struct OscillatingParam {
  std::vector<Permutation> taus;
  std::vector<Rat> alphas;
  std::vector<PermutonPair> pairs;

  int terms() const { return static_cast<int>(taus.size()); }

  // Recomputes gamma and the match residuals from the stored permutons and
  // checks both coefficient invariants exactly. Throws ContractError.
  void validate() const;

  nlohmann::json to_json() const;
  static OscillatingParam from_json(const nlohmann::json& j);
};

// t(tau_i, sigma) for every term, exact.
std::vector<Rat> term_densities(const OscillatingParam& p, const Permutation& sigma);

Rat evaluate_param(const OscillatingParam& p, const Permutation& sigma);

// sum_{i>k} alpha_i for 1-based k.
Rat tail_alpha_sum(const OscillatingParam& p, int k);

// Builds the K-term parameter with tau_i the descent of order q_start + i - 1.
// Term 1 pairs the reverse and identity permutons (gap 1). A term at order 3
// uses a fixed closed-form step-up pair with gap exactly 1/8. Every other
// term solves for a one-sided step-up mixture pair (gap_pair_search) whose
// sides agree on all lower-order densities to within 1e-6 while only one side
// carries a block of the new descent, separating them by the exact rational
// q!/q^q times the q-th power of the witness block mass. Deterministic in
// seed.
OscillatingParam build_oscillating_param(int q_start, int K, std::uint64_t seed);

struct TesterConfig {
  double epsilon = 0.01;
  int n0 = 50;                 // subsample order
  std::uint64_t samples = 200;
  std::uint64_t seed = 0;
};

struct TesterReport {
  int n = 0;
  int n0 = 0;
  std::uint64_t samples = 0;
  std::uint64_t failures = 0;  // |f(sigma) - f(induced)| >= epsilon
  double error_rate = 0.0;
  double mean_estimate = 0.0;  // mean of f over the induced patterns
  double mean_abs_dev = 0.0;
  nlohmann::json to_json() const;
};

// Estimates f(sigma) by the pattern induced on a uniform random n0-subset of
// positions and reports how often the plug-in estimate misses by epsilon.
TesterReport estimate_by_subsampling(const OscillatingParam& p, const Permutation& sigma,
                                     const TesterConfig& cfg);

struct ForcingOrderRow {
  int order = 0;
  double mean_max_low_gap = 0.0;  // mean over pairs of the worst low-order density gap
  Rat mean_abs_f_gap;             // exact mean of |f(sigma) - f(sigma')|
};

struct ForcingReport {
  int k = 0;                   // term whose pair generated the samples
  int low_order_cap = 0;       // gaps measured over non-trivial patterns up to this order
  int pairs_per_order = 0;
  Rat threshold;               // alpha_k * gamma_k / 4
  std::vector<ForcingOrderRow> rows;
  bool low_gap_decreasing = false;   // rows sorted by order, gaps strictly decreasing
  bool separation_at_largest = false;  // mean |f gap| at the largest order > threshold
  nlohmann::json to_json() const;
};

// Samples pairs (sigma, sigma') from pairs[k-1]'s permutons at each order and
// contrasts the vanishing low-order density gaps with the persistent f gap.
// Requires 2 <= k <= terms() and gamma_k > 0.
ForcingReport forcing_failure_experiment(const OscillatingParam& p, int k,
                                         const std::vector<int>& orders,
                                         std::uint64_t seed, int pairs_per_order = 20);

// Worst occurrence-density gap between sigma and sigma_prime over non-trivial
// patterns of order <= cap, exact. Orders 2 and 3 use the closed-form
// counters; higher orders enumerate patterns and count directly.
Rat max_low_order_gap(const Permutation& sigma, const Permutation& sigma_prime, int cap);

}  // namespace permlab
