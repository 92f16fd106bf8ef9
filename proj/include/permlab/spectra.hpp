#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "permlab/permuton.hpp"

namespace permlab {

enum class DensityKind { Occurrence, Monomorphism };

struct DensityValue {
  Rat value = Rat(0);
  bool exact = true;
  double std_error = 0.0;  // zero for exact entries
};

// Densities of every non-trivial indecomposable pattern of order <= q, in
// canonical order.
struct DensityVector {
  int q = 0;
  DensityKind kind = DensityKind::Occurrence;
  std::vector<Permutation> patterns;
  std::vector<DensityValue> values;
};

DensityVector density_vector(const Permutation& sigma, int q, DensityKind kind);
// Exact for the whole permuton family: occurrence entries via the closed
// expansions, monomorphism entries via dominating sums.
DensityVector density_vector(const Permuton& phi, int q, DensityKind kind);

// M[i][j] = 1 when pattern j has the same order as pattern i and carries all
// of i's inversions (so identity embeds i into j). Unit upper triangular in
// the canonical order; determinant 1.
struct MonMatrix {
  int q = 0;
  std::vector<Permutation> patterns;
  std::vector<std::vector<int>> entries;
};

MonMatrix mon_matrix(int q);

enum class TransformDirection { OccToMon, MonToOcc };

// Applies M (occ -> mon) or its inverse (mon -> occ) exactly. Entries stay
// exact iff the inputs were; standard errors propagate as absolute sums.
DensityVector transform_vector(const DensityVector& v, const MonMatrix& m,
                               TransformDirection dir);

// r step-up permutons whose density vectors form a non-singular r x r matrix
// V[i][j] = t(pattern_j, permuton_i).
struct SpanningSystem {
  int q = 0;
  std::vector<Permutation> patterns;
  std::vector<Permuton> permutons;
  std::vector<std::vector<Rat>> v;  // row i = densities of permuton i
  Rat det_v = Rat(0);

  nlohmann::json to_json() const;
  static SpanningSystem from_json(const nlohmann::json& j);
};

SpanningSystem find_spanning_system(int q, std::uint64_t seed, int max_attempts = 500);

// The weighted direct-sum density map: component j is
// sum_i x_i^{|pattern_j|} * v[i][j], defined on the open box (0, 1/r)^r.
// Equals the density vector of dsum((x_1, P_1), ..., (x_r, P_r)) exactly.
std::vector<Rat> mixture_density(const SpanningSystem& sys, std::span<const Rat> x);

struct JacobianResult {
  std::vector<std::vector<Rat>> matrix;  // [j][i] = d component_j / d x_i
  Rat det = Rat(0);
};

// Entries |pattern_j| * x_i^{|pattern_j|-1} * v[i][j]. Any positive x is
// accepted here so the identity at x = (1,...,1) can be checked.
JacobianResult mixture_jacobian(const SpanningSystem& sys, std::span<const Rat> x);

struct InteriorWitness {
  SpanningSystem system;
  std::vector<Rat> x;
  std::vector<Rat> w;  // mixture_density at x
  Rat det_jac = Rat(0);
};

// Random rational point in the open box with non-vanishing Jacobian
// determinant, certified in exact arithmetic.
InteriorWitness certify_interior_point(int q, std::uint64_t seed, int max_draws = 1000);

// Antipodal pair search over mixtures of step-up permutons of thorough
// indecomposable bases: find v, v' on a sphere inside (0, 1/(k+1)]^{k+1}
// whose mixtures agree on every pattern of the matched family. The
// distinguishing coordinate certifies inequality at its base pattern via
// t(base_i, mixture) = n! (v_i / n)^n.
struct AntipodalPair {
  std::vector<Permutation> matched;  // the k matched patterns
  std::vector<Permutation> bases;    // the k+1 step-up bases, order n
  int n = 0;
  std::vector<double> v, v_prime;
  double residual = 0.0;  // max matched-density gap at the returned pair
  int witness = 0;        // index into bases with v != v'
  bool converged = false;
  std::uint64_t seed = 0;

  Permuton mixture(bool primed) const;
};

AntipodalPair borsuk_pair_search(const std::vector<Permutation>& matched, int n,
                                 std::uint64_t seed, int budget,
                                 double residual_tol = 1e-8,
                                 std::optional<int> preferred_witness = std::nullopt);

// Same search with an explicit base family (all thorough indecomposable of a
// common order above every matched order). Lets callers steer away from base
// subsets whose low-order profiles collide, which pins the root to a subspace
// where the preferred witness coordinate vanishes.
AntipodalPair borsuk_pair_search(const std::vector<Permutation>& matched,
                                 std::vector<Permutation> bases,
                                 std::uint64_t seed, int budget,
                                 double residual_tol = 1e-8,
                                 std::optional<int> preferred_witness = std::nullopt);

// One-sided separated pair: two step-up mixtures agreeing on every matched
// pattern, where only phi carries a block of the witness pattern. Blocks of
// order below |witness| cannot host a thorough pattern of order |witness| and
// the direct sum cannot straddle an indecomposable one, so
// gamma = t(witness, phi) = (q!/q^q) g^q > 0 holds by construction (g is the
// witness block mass, a fixed rational that shrinks with the order because
// the matching equations stop admitting roots above a mass ceiling). The
// antipodal search cannot play this role for witnesses fixed by the
// reverse-complement-inverse symmetry (every monotone pattern is), because
// its root variety keeps the corresponding coordinate pair equal and the gap
// vanishes identically.
struct GapPair {
  std::vector<Permutation> matched;
  Permutation witness = Permutation::identity(1);
  Permuton phi = Permuton::uniform();
  Permuton phi_prime = Permuton::uniform();
  Rat gamma = Rat(0);      // exact t(witness, phi) - t(witness, phi_prime)
  double residual = 0.0;   // exact max matched-density gap at the returned pair
  bool converged = false;
  std::uint64_t seed = 0;
};

GapPair gap_pair_search(const std::vector<Permutation>& matched, const Permutation& witness,
                        std::uint64_t seed, int budget, double residual_tol = 1e-8);

// Exact rational determinant by Gaussian elimination.
Rat rational_det(std::vector<std::vector<Rat>> m);

}  // namespace permlab
