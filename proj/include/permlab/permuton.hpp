#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include <json.hpp>

#include "permlab/pattern_count.hpp"
#include "permlab/permutation.hpp"
#include "permlab/rational.hpp"
#include "permlab/rng.hpp"

namespace permlab {

class Permuton;

// Step-up permuton: |base| diagonal segments of slope 1, segment i spanning
// weight[i] of the x-axis, stacked in the vertical order given by base. Any
// unused mass (1 - sum of weights) becomes a diagonal segment from
// (s,s) to (1,1).
struct StepUpNode {
  Permutation base;
  std::vector<Rat> weights;
};

struct PermutonPart;

// Direct sum: scaled copies of the parts along the diagonal, in order; the
// leftover square, if any, carries the identity permuton.
struct DirectSumNode {
  std::vector<PermutonPart> parts;
};

struct UniformNode {};
struct IdentityNode {};
struct ReverseNode {};

using PermutonNode =
    std::variant<UniformNode, IdentityNode, ReverseNode, StepUpNode, DirectSumNode>;

inline constexpr int kPermutonDepthCap = 16;

class Permuton {
 public:
  static Permuton uniform();
  static Permuton identity();
  static Permuton reverse();
  static Permuton stepup(Permutation base, std::vector<Rat> weights);
  static Permuton dsum(std::vector<PermutonPart> parts);

  const PermutonNode& node() const { return *node_; }
  const PermutonNode* key() const { return node_.get(); }

  static Permuton from_json(const nlohmann::json& j);
  static Permuton from_json_text(const std::string& text);
  nlohmann::json to_json() const;

 private:
  explicit Permuton(std::shared_ptr<const PermutonNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const PermutonNode> node_;
};

struct PermutonPart {
  Rat weight;
  Permuton permuton;
};

struct Point {
  double x = 0.0, y = 0.0;
};

Point sample_point(const Permuton& phi, Rng& rng);

// n i.i.d. points ranked by x then y. Coordinate collisions (measure zero,
// but doubles) are resolved by resampling the colliding point.
Permutation sample_permutation(const Permuton& phi, int n, Rng& rng);
Permutation sample_permutation(const Permuton& phi, int n, std::uint64_t seed);

// Exact density of a non-trivial indecomposable pattern in a step-up
// permuton: compressive-partition expansion over occurrences of the
// quotients in the base.
Rat density_stepup(const Permutation& tau, const Permutation& base,
                   const std::vector<Rat>& weights);

// Exact density of a non-trivial indecomposable pattern in a direct sum:
// sum of x_i^k times the part densities (the leftover identity block
// contributes nothing).
Rat density_dsum(const Permutation& tau, const std::vector<PermutonPart>& parts);

// Exact density of an arbitrary pattern in any permuton tree. Extends the
// two formulas above: trailing identity components of the pattern may land
// on leftover diagonal mass, and a pattern splits across direct-sum blocks
// as an ordered direct sum with multinomial weights.
Rat exact_density(const Permutation& tau, const Permuton& phi);

// Exact monomorphism density of a non-trivial indecomposable pattern:
// sum of occurrence densities over the same-order patterns that dominate
// tau. Every such dominating pattern is itself indecomposable.
Rat density_mon_permuton(const Permutation& tau, const Permuton& phi);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

// Frequency of tau among permutations sampled from phi at order |tau|.
McEstimate density_mc(const Permutation& tau, const Permuton& phi,
                      std::uint64_t samples, std::uint64_t seed, int threads = 1);

// Frequency of the event "identity embeds tau into the sample monomorphically".
McEstimate density_mon_mc(const Permutation& tau, const Permuton& phi,
                          std::uint64_t samples, std::uint64_t seed, int threads = 1);

}  // namespace permlab
