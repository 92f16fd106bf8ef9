#include "permlab/permuton.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include "permlab/compressive.hpp"

namespace permlab {
namespace {

Rat weight_sum(const std::vector<Rat>& w) {
  Rat s = 0;
  for (const auto& x : w) s += x;
  return s;
}

Rat rat_pow(const Rat& base, int e) {
  Rat r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

void check_weights(const std::vector<Rat>& w, const std::string& what) {
  for (const auto& x : w)
    if (x <= 0) throw ContractError(what + ": weights must be positive");
  if (weight_sum(w) > 1) throw ContractError(what + ": weights must sum to at most 1");
}

}  // namespace

Permuton Permuton::uniform() {
  return Permuton(std::make_shared<PermutonNode>(UniformNode{}));
}
Permuton Permuton::identity() {
  return Permuton(std::make_shared<PermutonNode>(IdentityNode{}));
}
Permuton Permuton::reverse() {
  return Permuton(std::make_shared<PermutonNode>(ReverseNode{}));
}

Permuton Permuton::stepup(Permutation base, std::vector<Rat> weights) {
  if (static_cast<int>(weights.size()) != base.order())
    throw ContractError("stepup: need one weight per base entry");
  check_weights(weights, "stepup");
  return Permuton(std::make_shared<PermutonNode>(
      StepUpNode{std::move(base), std::move(weights)}));
}

Permuton Permuton::dsum(std::vector<PermutonPart> parts) {
  if (parts.empty()) throw ContractError("dsum: needs at least one part");
  std::vector<Rat> w;
  w.reserve(parts.size());
  for (const auto& p : parts) w.push_back(p.weight);
  check_weights(w, "dsum");
  return Permuton(std::make_shared<PermutonNode>(DirectSumNode{std::move(parts)}));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Rat weight_from_json(const nlohmann::json& j, const std::string& path) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long long>());
    if (j.is_number_float()) return rat_from_double(j.get<double>());
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
  throw ParseError(path + ": weight must be a number or a rational string");
}

Permuton permuton_from_json(const nlohmann::json& j, const std::string& path, int depth) {
  if (depth > kPermutonDepthCap)
    throw ParseError(path + ": nesting exceeds depth cap " +
                     std::to_string(kPermutonDepthCap));
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ParseError(path + ": permuton node must be an object with a \"type\" string");
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform") return Permuton::uniform();
  if (type == "identity") return Permuton::identity();
  if (type == "reverse") return Permuton::reverse();
  if (type == "stepup") {
    if (!j.contains("sigma") || !j.at("sigma").is_string())
      throw ParseError(path + ".sigma: expected a permutation string");
    Permutation base = [&] {
      try {
        return Permutation::parse(j.at("sigma").get<std::string>());
      } catch (const Error& e) {
        throw ParseError(path + ".sigma: " + e.what());
      }
    }();
    if (!j.contains("weights") || !j.at("weights").is_array())
      throw ParseError(path + ".weights: expected an array");
    std::vector<Rat> w;
    for (size_t i = 0; i < j.at("weights").size(); ++i)
      w.push_back(weight_from_json(j.at("weights")[i],
                                   path + ".weights[" + std::to_string(i) + "]"));
    try {
      return Permuton::stepup(std::move(base), std::move(w));
    } catch (const Error& e) {
      throw ParseError(path + ".weights: " + e.what());
    }
  }
  if (type == "dsum") {
    if (!j.contains("parts") || !j.at("parts").is_array() || j.at("parts").empty())
      throw ParseError(path + ".parts: expected a non-empty array");
    std::vector<PermutonPart> parts;
    for (size_t i = 0; i < j.at("parts").size(); ++i) {
      const std::string p = path + ".parts[" + std::to_string(i) + "]";
      const auto& jp = j.at("parts")[i];
      if (!jp.is_object() || !jp.contains("weight") || !jp.contains("permuton"))
        throw ParseError(p + ": expected {\"weight\", \"permuton\"}");
      Rat w = weight_from_json(jp.at("weight"), p + ".weight");
      Permuton child = permuton_from_json(jp.at("permuton"), p + ".permuton", depth + 1);
      parts.push_back(PermutonPart{std::move(w), std::move(child)});
    }
    try {
      return Permuton::dsum(std::move(parts));
    } catch (const Error& e) {
      throw ParseError(path + ".parts: " + e.what());
    }
  }
  throw ParseError(path + ".type: unknown permuton type \"" + type + "\"");
}

}  // namespace

Permuton Permuton::from_json(const nlohmann::json& j) {
  return permuton_from_json(j, "$", 1);
}

Permuton Permuton::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("permuton JSON: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json Permuton::to_json() const {
  struct V {
    nlohmann::json operator()(const UniformNode&) const {
      return {{"type", "uniform"}};
    }
    nlohmann::json operator()(const IdentityNode&) const {
      return {{"type", "identity"}};
    }
    nlohmann::json operator()(const ReverseNode&) const {
      return {{"type", "reverse"}};
    }
    nlohmann::json operator()(const StepUpNode& n) const {
      nlohmann::json w = nlohmann::json::array();
      for (const auto& x : n.weights) w.push_back(rat_str(x));
      return {{"type", "stepup"}, {"sigma", n.base.str()}, {"weights", w}};
    }
    nlohmann::json operator()(const DirectSumNode& n) const {
      nlohmann::json parts = nlohmann::json::array();
      for (const auto& p : n.parts)
        parts.push_back({{"weight", rat_str(p.weight)},
                         {"permuton", p.permuton.to_json()}});
      return {{"type", "dsum"}, {"parts", parts}};
    }
  };
  return std::visit(V{}, node());
}

// ---------------------------------------------------------------------------
// Sampling

Point sample_point(const Permuton& phi, Rng& rng) {
  struct V {
    Rng& rng;
    Point operator()(const UniformNode&) const {
      return {rng.uniform01(), rng.uniform01()};
    }
    Point operator()(const IdentityNode&) const {
      const double u = rng.uniform01();
      return {u, u};
    }
    Point operator()(const ReverseNode&) const {
      const double u = rng.uniform01();
      return {u, 1.0 - u};
    }
    Point operator()(const StepUpNode& n) const {
      const int m = n.base.order();
      std::vector<double> w(static_cast<size_t>(m));
      for (int i = 0; i < m; ++i) w[static_cast<size_t>(i)] = rat_double(n.weights[static_cast<size_t>(i)]);
      const double u = rng.uniform01();
      double cum = 0.0;
      for (int i = 0; i < m; ++i) {
        if (u < cum + w[static_cast<size_t>(i)]) {
          // y-offset: total weight of segments below this one
          double ybase = 0.0;
          for (int j = 0; j < m; ++j)
            if (n.base(j + 1) < n.base(i + 1)) ybase += w[static_cast<size_t>(j)];
          return {u, ybase + (u - cum)};
        }
        cum += w[static_cast<size_t>(i)];
      }
      return {u, u};  // leftover diagonal segment
    }
    Point operator()(const DirectSumNode& n) const {
      const double u = rng.uniform01();
      double cum = 0.0;
      for (const auto& p : n.parts) {
        const double w = rat_double(p.weight);
        if (u < cum + w) {
          Point inner = sample_point(p.permuton, rng);
          return {cum + w * inner.x, cum + w * inner.y};
        }
        cum += w;
      }
      return {u, u};  // leftover identity square
    }
  };
  return std::visit(V{rng}, phi.node());
}

Permutation sample_permutation(const Permuton& phi, int n, Rng& rng) {
  if (n < 1) throw ContractError("sample_permutation: n must be >= 1");
  std::vector<Point> pts;
  pts.reserve(static_cast<size_t>(n));
  std::set<double> xs, ys;
  while (static_cast<int>(pts.size()) < n) {
    Point p = sample_point(phi, rng);
    if (!xs.insert(p.x).second) continue;
    if (!ys.insert(p.y).second) {
      xs.erase(p.x);
      continue;
    }
    pts.push_back(p);
  }
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return pts[static_cast<size_t>(a)].x < pts[static_cast<size_t>(b)].x; });
  // rank of each y
  std::vector<int> yrank_src(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) yrank_src[static_cast<size_t>(i)] = i;
  std::sort(yrank_src.begin(), yrank_src.end(),
            [&](int a, int b) { return pts[static_cast<size_t>(a)].y < pts[static_cast<size_t>(b)].y; });
  std::vector<int> yrank(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) yrank[static_cast<size_t>(yrank_src[static_cast<size_t>(r)])] = r + 1;
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = yrank[static_cast<size_t>(order[static_cast<size_t>(i)])];
  return Permutation(std::move(out));
}

Permutation sample_permutation(const Permuton& phi, int n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_permutation(phi, n, rng);
}

// ---------------------------------------------------------------------------
// Exact densities

Rat density_stepup(const Permutation& tau, const Permutation& base,
                   const std::vector<Rat>& weights) {
  if (tau.order() < 2)
    throw ContractError("density_stepup: pattern must be non-trivial");
  if (!is_indecomposable(tau))
    throw ContractError("density_stepup: pattern " + tau.str() +
                        " is decomposable; the expansion requires indecomposability");
  if (static_cast<int>(weights.size()) != base.order())
    throw ContractError("density_stepup: need one weight per base entry");
  check_weights(weights, "density_stepup");

  const int k = tau.order();
  Rat total = 0;
  for (const auto& part : enumerate_compressive(tau)) {
    const Permutation q = quotient(tau, part);
    Rat block_factor = 1;
    for (int b = 0; b < part.block_count(); ++b)
      block_factor /= Rat(factorial(static_cast<unsigned>(part.block_size(b))), 1);
    Rat occ_sum = 0;
    for_each_occurrence(q, base, [&](std::span<const int> pos) {
      Rat prod = 1;
      for (int b = 0; b < part.block_count(); ++b)
        prod *= rat_pow(weights[static_cast<size_t>(pos[static_cast<size_t>(b)]) - 1],
                        part.block_size(b));
      occ_sum += prod;
    });
    total += occ_sum * block_factor;
  }
  return total * Rat(factorial(static_cast<unsigned>(k)), 1);
}

namespace {

// Restricted recursion for indecomposable patterns (leaf rules plus the
// block-wise direct-sum rule).
Rat density_indec(const Permutation& tau, const Permuton& phi);

Rat density_indec_parts(const Permutation& tau, const std::vector<PermutonPart>& parts) {
  const int k = tau.order();
  Rat total = 0;
  for (const auto& p : parts)
    total += rat_pow(p.weight, k) * density_indec(tau, p.permuton);
  return total;  // leftover identity block carries no indecomposable pattern
}

Rat density_indec(const Permutation& tau, const Permuton& phi) {
  struct V {
    const Permutation& tau;
    Rat operator()(const UniformNode&) const {
      return Rat(1, factorial(static_cast<unsigned>(tau.order())));
    }
    Rat operator()(const IdentityNode&) const { return Rat(0); }
    Rat operator()(const ReverseNode&) const {
      return tau == Permutation::reversal(tau.order()) ? Rat(1) : Rat(0);
    }
    Rat operator()(const StepUpNode& n) const {
      return density_stepup(tau, n.base, n.weights);
    }
    Rat operator()(const DirectSumNode& n) const {
      return density_indec_parts(tau, n.parts);
    }
  };
  return std::visit(V{tau}, phi.node());
}

// General evaluator, memoized per (node, pattern). Patterns decompose across
// direct-sum blocks at their prefix split points; trailing identity
// components may also land on leftover diagonal mass.
class ExactEvaluator {
 public:
  Rat eval(const Permutation& tau, const Permuton& phi) {
    const auto key = std::make_pair(phi.key(), tau.values());
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Rat r = compute(tau, phi);
    memo_.emplace(key, r);
    return r;
  }

 private:
  std::map<std::pair<const PermutonNode*, std::vector<int>>, Rat> memo_;

  Rat compute(const Permutation& tau, const Permuton& phi) {
    struct V {
      ExactEvaluator& self;
      const Permutation& tau;
      Rat operator()(const UniformNode&) const {
        return Rat(1, factorial(static_cast<unsigned>(tau.order())));
      }
      Rat operator()(const IdentityNode&) const {
        return tau == Permutation::identity(tau.order()) ? Rat(1) : Rat(0);
      }
      Rat operator()(const ReverseNode&) const {
        return tau == Permutation::reversal(tau.order()) ? Rat(1) : Rat(0);
      }
      Rat operator()(const StepUpNode& n) const { return self.stepup(tau, n); }
      Rat operator()(const DirectSumNode& n) const { return self.dsum(tau, n); }
    };
    return std::visit(V{*this, tau}, phi.node());
  }

  Rat stepup(const Permutation& tau, const StepUpNode& n) {
    const int k = tau.order();
    const Rat tail = Rat(1) - weight_sum(n.weights);
    Rat total = 0;
    for (int s = 0; s <= k; ++s) {
      // s trailing points on the leftover diagonal force tau to end with the
      // identity pattern on its top s values; once that fails, larger s fail too.
      bool suffix_ok = true;
      for (int j = 1; j <= s && suffix_ok; ++j) suffix_ok = tau(k - s + j) == k - s + j;
      if (!suffix_ok) break;
      if (s > 0 && tail == 0) continue;
      const Rat tail_factor =
          rat_pow(tail, s) / Rat(factorial(static_cast<unsigned>(s)), 1);
      if (s == k) {
        total += tail_factor * Rat(factorial(static_cast<unsigned>(k)), 1);
        break;
      }
      std::vector<int> prefix(tau.values().begin(), tau.values().end() - s);
      const Permutation rho(std::move(prefix));  // values are exactly 1..k-s
      Rat inner = 0;
      for (const auto& part : enumerate_compressive(rho)) {
        const Permutation q = quotient(rho, part);
        Rat block_factor = 1;
        for (int b = 0; b < part.block_count(); ++b)
          block_factor /= Rat(factorial(static_cast<unsigned>(part.block_size(b))), 1);
        Rat occ_sum = 0;
        for_each_occurrence(q, n.base, [&](std::span<const int> pos) {
          Rat prod = 1;
          for (int b = 0; b < part.block_count(); ++b)
            prod *= rat_pow(n.weights[static_cast<size_t>(pos[static_cast<size_t>(b)]) - 1],
                            part.block_size(b));
          occ_sum += prod;
        });
        inner += occ_sum * block_factor;
      }
      total += inner * tail_factor * Rat(factorial(static_cast<unsigned>(k)), 1);
    }
    return total;
  }

  Rat dsum(const Permutation& tau, const DirectSumNode& n) {
    const int k = tau.order();
    // Positions where a prefix of tau maps onto itself: the only places the
    // pattern can split between consecutive blocks.
    std::vector<int> sp{0};
    int maxv = 0;
    for (int i = 1; i < k; ++i) {
      maxv = std::max(maxv, tau(i));
      if (maxv == i) sp.push_back(i);
    }
    sp.push_back(k);
    const int atoms = static_cast<int>(sp.size()) - 1;

    Rat tail_weight = 1;
    for (const auto& p : n.parts) tail_weight -= p.weight;

    // F[a] = sum over assignments of the first a atoms to the blocks handled
    // so far of prod(x^len * t(pattern, block) / len!).
    std::vector<Rat> F(static_cast<size_t>(atoms) + 1, Rat(0));
    F[0] = 1;
    const int block_count = static_cast<int>(n.parts.size()) + 1;  // + leftover identity
    for (int bi = 0; bi < block_count; ++bi) {
      const bool leftover = bi == static_cast<int>(n.parts.size());
      const Rat& x = leftover ? tail_weight : n.parts[static_cast<size_t>(bi)].weight;
      std::vector<Rat> G = F;  // block left empty
      if (!(x == 0)) {
        for (int a = 0; a < atoms; ++a) {
          if (F[static_cast<size_t>(a)] == 0) continue;
          for (int b = a + 1; b <= atoms; ++b) {
            const int lo = sp[static_cast<size_t>(a)], hi = sp[static_cast<size_t>(b)];
            std::vector<int> vals;
            vals.reserve(static_cast<size_t>(hi - lo));
            for (int i = lo + 1; i <= hi; ++i) vals.push_back(tau(i) - lo);
            const Permutation rho(std::move(vals));
            const Rat t = leftover
                              ? (rho == Permutation::identity(hi - lo) ? Rat(1) : Rat(0))
                              : eval(rho, n.parts[static_cast<size_t>(bi)].permuton);
            if (t == 0) continue;
            G[static_cast<size_t>(b)] +=
                F[static_cast<size_t>(a)] * rat_pow(x, hi - lo) * t /
                Rat(factorial(static_cast<unsigned>(hi - lo)), 1);
          }
        }
      }
      F.swap(G);
    }
    return F[static_cast<size_t>(atoms)] * Rat(factorial(static_cast<unsigned>(k)), 1);
  }
};

}  // namespace

Rat density_dsum(const Permutation& tau, const std::vector<PermutonPart>& parts) {
  if (tau.order() < 2)
    throw ContractError("density_dsum: pattern must be non-trivial");
  if (!is_indecomposable(tau))
    throw ContractError("density_dsum: pattern " + tau.str() +
                        " is decomposable; use the general evaluator");
  std::vector<Rat> w;
  w.reserve(parts.size());
  for (const auto& p : parts) w.push_back(p.weight);
  check_weights(w, "density_dsum");
  return density_indec_parts(tau, parts);
}

Rat exact_density(const Permutation& tau, const Permuton& phi) {
  ExactEvaluator ev;
  return ev.eval(tau, phi);
}

Rat density_mon_permuton(const Permutation& tau, const Permuton& phi) {
  if (tau.order() < 2)
    throw ContractError("density_mon_permuton: pattern must be non-trivial");
  if (!is_indecomposable(tau))
    throw ContractError("density_mon_permuton: pattern must be indecomposable");
  if (tau.order() > kEnumerationCap)
    throw CapError("density_mon_permuton: pattern order exceeds enumeration cap");
  const int k = tau.order();
  ExactEvaluator ev;
  Rat total = 0;
  std::vector<int> v(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) v[static_cast<size_t>(i)] = i + 1;
  std::sort(v.begin(), v.end());
  do {
    Permutation cand(v);
    if (!dominates(cand, tau)) continue;
    // Dominating patterns of an indecomposable pattern are indecomposable:
    // a trapped prefix would have no inversions across its boundary, and
    // tau has no more inversions than cand.
    total += ev.eval(cand, phi);
  } while (std::next_permutation(v.begin(), v.end()));
  return total;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

McEstimate frequency_mc(const std::function<bool(const Permutation&)>& event, int order,
                        const Permuton& phi, std::uint64_t samples, std::uint64_t seed,
                        int threads) {
  constexpr std::uint64_t kShardSize = 1 << 12;
  const std::uint64_t shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<std::uint64_t> hits(static_cast<size_t>(shards), 0);
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t shard = next.fetch_add(1);
      if (shard >= shards) return;
      const std::uint64_t lo = shard * kShardSize;
      const std::uint64_t count = std::min(kShardSize, samples - lo);
      Rng rng(Rng::derive(seed, shard));
      std::uint64_t h = 0;
      for (std::uint64_t s = 0; s < count; ++s)
        if (event(sample_permutation(phi, order, rng))) ++h;
      hits[static_cast<size_t>(shard)] = h;
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  McEstimate out;
  out.samples = samples;
  if (samples > 0) {
    const double p = static_cast<double>(total) / static_cast<double>(samples);
    out.estimate = p;
    out.std_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
  }
  return out;
}

}  // namespace

McEstimate density_mc(const Permutation& tau, const Permuton& phi,
                      std::uint64_t samples, std::uint64_t seed, int threads) {
  return frequency_mc([&](const Permutation& s) { return s == tau; }, tau.order(), phi,
                      samples, seed, threads);
}

McEstimate density_mon_mc(const Permutation& tau, const Permuton& phi,
                          std::uint64_t samples, std::uint64_t seed, int threads) {
  return frequency_mc([&](const Permutation& s) { return dominates(s, tau); },
                      tau.order(), phi, samples, seed, threads);
}

}  // namespace permlab
