#include "permlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <cstdlib>

namespace permlab {
namespace {

Rat rat_pow(const Rat& base, int e) {
  Rat r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

std::vector<Rat> random_stepup_weights(int m, Rng& rng) {
  // numerators in 1..20 over a denominator that keeps the sum at or below 1
  std::vector<std::uint64_t> a(static_cast<size_t>(m));
  std::uint64_t sum = 0;
  for (auto& x : a) {
    x = 1 + rng.below(20);
    sum += x;
  }
  const std::uint64_t slack = rng.below(21);
  std::vector<Rat> w;
  w.reserve(a.size());
  for (auto x : a) w.emplace_back(BigInt(x), BigInt(sum + slack));
  return w;
}

}  // namespace

Rat rational_det(std::vector<std::vector<Rat>> m) {
  const size_t r = m.size();
  Rat det = 1;
  for (size_t col = 0; col < r; ++col) {
    size_t piv = col;
    while (piv < r && m[piv][col] == 0) ++piv;
    if (piv == r) return Rat(0);
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (size_t row = col + 1; row < r; ++row) {
      if (m[row][col] == 0) continue;
      const Rat f = m[row][col] / m[col][col];
      for (size_t c2 = col; c2 < r; ++c2) m[row][c2] -= f * m[col][c2];
    }
  }
  return det;
}

DensityVector density_vector(const Permutation& sigma, int q, DensityKind kind) {
  DensityVector out;
  out.q = q;
  out.kind = kind;
  out.patterns = canonical_pattern_list(q);
  out.values.reserve(out.patterns.size());
  for (const auto& tau : out.patterns) {
    DensityValue dv;
    dv.value = kind == DensityKind::Occurrence ? density(tau, sigma)
                                               : density_mon(tau, sigma);
    out.values.push_back(std::move(dv));
  }
  return out;
}

DensityVector density_vector(const Permuton& phi, int q, DensityKind kind) {
  DensityVector out;
  out.q = q;
  out.kind = kind;
  out.patterns = canonical_pattern_list(q);
  out.values.reserve(out.patterns.size());
  for (const auto& tau : out.patterns) {
    DensityValue dv;
    dv.value = kind == DensityKind::Occurrence ? exact_density(tau, phi)
                                               : density_mon_permuton(tau, phi);
    out.values.push_back(std::move(dv));
  }
  return out;
}

MonMatrix mon_matrix(int q) {
  MonMatrix m;
  m.q = q;
  m.patterns = canonical_pattern_list(q);
  const size_t r = m.patterns.size();
  m.entries.assign(r, std::vector<int>(r, 0));
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < r; ++j)
      m.entries[i][j] = dominates(m.patterns[j], m.patterns[i]) ? 1 : 0;
  // Certify shape: unit diagonal, zero strictly below (a dominating pattern
  // of a distinct pattern has strictly more inversions).
  for (size_t i = 0; i < r; ++i) {
    if (m.entries[i][i] != 1) throw Error("mon_matrix: diagonal entry not 1");
    for (size_t j = 0; j < i; ++j)
      if (m.entries[i][j] != 0) throw Error("mon_matrix: lower entry not 0");
  }
  return m;
}

DensityVector transform_vector(const DensityVector& v, const MonMatrix& m,
                               TransformDirection dir) {
  const size_t r = m.patterns.size();
  if (v.values.size() != r || v.q != m.q)
    throw ContractError("transform_vector: vector and matrix index different pattern lists");
  if (dir == TransformDirection::OccToMon && v.kind != DensityKind::Occurrence)
    throw ContractError("transform_vector: occ->mon needs an occurrence vector");
  if (dir == TransformDirection::MonToOcc && v.kind != DensityKind::Monomorphism)
    throw ContractError("transform_vector: mon->occ needs a monomorphism vector");

  // Integer coefficients: M itself, or its inverse by back substitution
  // (unit upper triangular, so the inverse is integral).
  std::vector<std::vector<BigInt>> coef(r, std::vector<BigInt>(r, 0));
  if (dir == TransformDirection::OccToMon) {
    for (size_t i = 0; i < r; ++i)
      for (size_t j = 0; j < r; ++j) coef[i][j] = m.entries[i][j];
  } else {
    for (size_t col = 0; col < r; ++col) {
      std::vector<BigInt> e(r, 0);
      e[col] = 1;
      for (size_t i = col + 1; i-- > 0;) {
        BigInt s = e[i];
        for (size_t j = i + 1; j < r; ++j)
          if (m.entries[i][j] != 0) s -= BigInt(m.entries[i][j]) * coef[j][col];
        coef[i][col] = s;
        if (i == 0) break;
      }
    }
  }

  DensityVector out;
  out.q = v.q;
  out.kind = dir == TransformDirection::OccToMon ? DensityKind::Monomorphism
                                                 : DensityKind::Occurrence;
  out.patterns = m.patterns;
  out.values.resize(r);
  for (size_t i = 0; i < r; ++i) {
    Rat acc = 0;
    bool exact = true;
    double se = 0.0;
    for (size_t j = 0; j < r; ++j) {
      if (coef[i][j] == 0) continue;
      acc += Rat(coef[i][j], 1) * v.values[j].value;
      exact = exact && v.values[j].exact;
      se += std::abs(static_cast<double>(coef[i][j])) * v.values[j].std_error;
    }
    out.values[i] = DensityValue{std::move(acc), exact, se};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spanning systems

nlohmann::json SpanningSystem::to_json() const {
  nlohmann::json pats = nlohmann::json::array();
  for (const auto& p : patterns) pats.push_back(p.str());
  nlohmann::json perms = nlohmann::json::array();
  for (const auto& p : permutons) perms.push_back(p.to_json());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : v) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : row) r.push_back(rat_str(x));
    rows.push_back(r);
  }
  return {{"q", q}, {"patterns", pats}, {"permutons", perms},
          {"v", rows}, {"det_v", rat_str(det_v)}};
}

SpanningSystem SpanningSystem::from_json(const nlohmann::json& j) {
  SpanningSystem s;
  try {
    s.q = j.at("q").get<int>();
    for (const auto& p : j.at("patterns")) s.patterns.push_back(Permutation::parse(p.get<std::string>()));
    for (const auto& p : j.at("permutons")) s.permutons.push_back(Permuton::from_json(p));
    for (const auto& row : j.at("v")) {
      std::vector<Rat> r;
      for (const auto& x : row) r.push_back(parse_rational(x.get<std::string>()));
      s.v.push_back(std::move(r));
    }
    s.det_v = parse_rational(j.at("det_v").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("spanning system JSON: ") + e.what());
  }
  const size_t r = s.patterns.size();
  if (s.permutons.size() != r || s.v.size() != r)
    throw ParseError("spanning system JSON: inconsistent dimensions");
  for (const auto& row : s.v)
    if (row.size() != r) throw ParseError("spanning system JSON: ragged matrix");
  return s;
}

SpanningSystem find_spanning_system(int q, std::uint64_t seed, int max_attempts) {
  const auto patterns = canonical_pattern_list(q);
  const int r = static_cast<int>(patterns.size());
  Rat best_abs(0);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(attempt)));
    SpanningSystem sys;
    sys.q = q;
    sys.patterns = patterns;
    for (int i = 0; i < r; ++i) {
      const auto& base = patterns[rng.below(patterns.size())];
      sys.permutons.push_back(
          Permuton::stepup(base, random_stepup_weights(base.order(), rng)));
    }
    sys.v.assign(static_cast<size_t>(r), {});
    for (int i = 0; i < r; ++i) {
      sys.v[static_cast<size_t>(i)].reserve(static_cast<size_t>(r));
      for (int j = 0; j < r; ++j)
        sys.v[static_cast<size_t>(i)].push_back(
            exact_density(patterns[static_cast<size_t>(j)], sys.permutons[static_cast<size_t>(i)]));
    }
    sys.det_v = rational_det(sys.v);
    const Rat a = sys.det_v < 0 ? -sys.det_v : sys.det_v;
    best_abs = std::max(best_abs, a);
    if (sys.det_v != 0 && rat_double(a) > 1e-9) return sys;
  }
  throw SearchError("find_spanning_system: no non-singular system in " +
                    std::to_string(max_attempts) + " attempts (best |det| = " +
                    rat_str(best_abs) + ")");
}

std::vector<Rat> mixture_density(const SpanningSystem& sys, std::span<const Rat> x) {
  const size_t r = sys.patterns.size();
  if (x.size() != r) throw ContractError("mixture_density: x has wrong dimension");
  for (const auto& xi : x)
    if (xi <= 0 || xi >= Rat(1, static_cast<int>(r)))
      throw ContractError("mixture_density: x outside the open box (0, 1/r)^r");
  std::vector<Rat> out(r, Rat(0));
  for (size_t j = 0; j < r; ++j) {
    const int k = sys.patterns[j].order();
    for (size_t i = 0; i < r; ++i)
      out[j] += rat_pow(x[i], k) * sys.v[i][j];
  }
  return out;
}

JacobianResult mixture_jacobian(const SpanningSystem& sys, std::span<const Rat> x) {
  const size_t r = sys.patterns.size();
  if (x.size() != r) throw ContractError("mixture_jacobian: x has wrong dimension");
  for (const auto& xi : x)
    if (xi <= 0) throw ContractError("mixture_jacobian: x must be positive");
  JacobianResult out;
  out.matrix.assign(r, std::vector<Rat>(r, Rat(0)));
  for (size_t j = 0; j < r; ++j) {
    const int k = sys.patterns[j].order();
    for (size_t i = 0; i < r; ++i)
      out.matrix[j][i] = Rat(k) * rat_pow(x[i], k - 1) * sys.v[i][j];
  }
  out.det = rational_det(out.matrix);
  return out;
}

InteriorWitness certify_interior_point(int q, std::uint64_t seed, int max_draws) {
  InteriorWitness w;
  w.system = find_spanning_system(q, Rng::derive(seed, 0));
  const size_t r = w.system.patterns.size();
  Rng rng(Rng::derive(seed, 1));
  for (int draw = 0; draw < max_draws; ++draw) {
    std::vector<Rat> x;
    x.reserve(r);
    for (size_t i = 0; i < r; ++i)
      x.emplace_back(BigInt(1 + rng.below(999)), BigInt(1000 * r));
    auto jac = mixture_jacobian(w.system, x);
    if (jac.det == 0) continue;
    w.x = std::move(x);
    w.w = mixture_density(w.system, w.x);
    w.det_jac = jac.det;
    return w;
  }
  throw SearchError("certify_interior_point: Jacobian vanished on " +
                    std::to_string(max_draws) + " random interior points");
}

// ---------------------------------------------------------------------------
// Antipodal pair search

namespace {

// Double-precision evaluator for densities of small patterns in mixtures
// dsum((u_1, S_1), ..., (u_m, S_m)) with fixed step-up parts S_b and variable
// block weights u. Per-part pattern densities are precomputed exactly; each
// evaluation is a small DP over the pattern's split atoms.
class MixtureGamma {
 public:
  MixtureGamma(std::vector<Permutation> patterns, const std::vector<Permuton>& parts)
      : patterns_(std::move(patterns)), parts_(parts.size()) {
    for (const auto& tau : patterns_) {
      PatternPlan plan;
      const int k = tau.order();
      plan.k = k;
      plan.split.push_back(0);
      int maxv = 0;
      for (int i = 1; i < k; ++i) {
        maxv = std::max(maxv, tau(i));
        if (maxv == i) plan.split.push_back(i);
      }
      plan.split.push_back(k);
      const int atoms = static_cast<int>(plan.split.size()) - 1;
      plan.range_is_identity.assign(static_cast<size_t>(atoms) + 1,
                                    std::vector<char>(static_cast<size_t>(atoms) + 1, 0));
      plan.part_density.assign(
          static_cast<size_t>(atoms) + 1,
          std::vector<std::vector<double>>(static_cast<size_t>(atoms) + 1));
      for (int a = 0; a < atoms; ++a) {
        for (int b = a + 1; b <= atoms; ++b) {
          const int lo = plan.split[static_cast<size_t>(a)], hi = plan.split[static_cast<size_t>(b)];
          std::vector<int> vals;
          for (int i = lo + 1; i <= hi; ++i) vals.push_back(tau(i) - lo);
          Permutation rho(vals);
          plan.range_is_identity[static_cast<size_t>(a)][static_cast<size_t>(b)] =
              rho == Permutation::identity(hi - lo);
          auto& row = plan.part_density[static_cast<size_t>(a)][static_cast<size_t>(b)];
          row.reserve(parts.size());
          for (const auto& part : parts)
            row.push_back(rat_double(exact_density(rho, part)));
        }
      }
      plans_.push_back(std::move(plan));
    }
    inv_factorial_.resize(16, 1.0);
    for (int i = 1; i < 16; ++i)
      inv_factorial_[static_cast<size_t>(i)] = inv_factorial_[static_cast<size_t>(i) - 1] / i;
  }

  size_t dim() const { return patterns_.size(); }
  size_t parts() const { return parts_; }

  void eval(const std::vector<double>& u, std::vector<double>& out) const {
    double tail = 1.0;
    for (double x : u) tail -= x;
    out.resize(patterns_.size());
    for (size_t pj = 0; pj < plans_.size(); ++pj) {
      const auto& plan = plans_[pj];
      const int atoms = static_cast<int>(plan.split.size()) - 1;
      std::vector<double> F(static_cast<size_t>(atoms) + 1, 0.0);
      F[0] = 1.0;
      for (size_t bi = 0; bi <= parts_; ++bi) {
        const bool leftover = bi == parts_;
        const double x = leftover ? tail : u[bi];
        std::vector<double> G = F;
        if (x != 0.0) {
          double xp = 1.0;
          std::vector<double> xpow(static_cast<size_t>(atoms) + 1);
          for (int e = 0; e <= atoms; ++e) {
            xpow[static_cast<size_t>(e)] = xp;
            xp *= x;
          }
          for (int a = 0; a < atoms; ++a) {
            if (F[static_cast<size_t>(a)] == 0.0) continue;
            for (int b = a + 1; b <= atoms; ++b) {
              const int len = plan.split[static_cast<size_t>(b)] - plan.split[static_cast<size_t>(a)];
              const double t =
                  leftover ? (plan.range_is_identity[static_cast<size_t>(a)][static_cast<size_t>(b)] ? 1.0 : 0.0)
                           : plan.part_density[static_cast<size_t>(a)][static_cast<size_t>(b)][bi];
              if (t == 0.0) continue;
              // x^len picks up only the length of this group of atoms
              double xl = 1.0;
              for (int e = 0; e < len; ++e) xl *= x;
              G[static_cast<size_t>(b)] += F[static_cast<size_t>(a)] * xl * t *
                                           inv_factorial_[static_cast<size_t>(len)];
            }
          }
        }
        F.swap(G);
      }
      double fact = 1.0;
      for (int i = 2; i <= plan.k; ++i) fact *= i;
      out[pj] = F[static_cast<size_t>(atoms)] * fact;
    }
  }

 private:
  struct PatternPlan {
    int k = 0;
    std::vector<int> split;
    std::vector<std::vector<char>> range_is_identity;
    std::vector<std::vector<std::vector<double>>> part_density;  // [a][b][part]
  };
  std::vector<Permutation> patterns_;
  size_t parts_;
  std::vector<PatternPlan> plans_;
  std::vector<double> inv_factorial_;
};

// Solves (A + lambda I) x = b for small symmetric A, Gaussian elimination.
bool solve_damped(std::vector<std::vector<double>> a, std::vector<double> b,
                  double lambda, std::vector<double>& x) {
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) a[i][i] += lambda;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r2 = col + 1; r2 < n; ++r2)
      if (std::abs(a[r2][col]) > std::abs(a[piv][col])) piv = r2;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (size_t r2 = col + 1; r2 < n; ++r2) {
      const double f = a[r2][col] / a[col][col];
      for (size_t c2 = col; c2 < n; ++c2) a[r2][c2] -= f * a[col][c2];
      b[r2] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return true;
}

}  // namespace

Permuton AntipodalPair::mixture(bool primed) const {
  const auto& u = primed ? v_prime : v;
  std::vector<PermutonPart> parts;
  parts.reserve(bases.size());
  for (size_t i = 0; i < bases.size(); ++i) {
    std::vector<Rat> w(static_cast<size_t>(n), Rat(1, n));
    parts.push_back(PermutonPart{rat_from_double(u[i]), Permuton::stepup(bases[i], w)});
  }
  return Permuton::dsum(std::move(parts));
}

AntipodalPair borsuk_pair_search(const std::vector<Permutation>& matched, int n,
                                 std::uint64_t seed, int budget, double residual_tol,
                                 std::optional<int> preferred_witness) {
  const int k = static_cast<int>(matched.size());
  if (k < 1) throw ContractError("borsuk_pair_search: matched family is empty");
  for (const auto& tau : matched)
    if (tau.order() >= n)
      throw ContractError("borsuk_pair_search: base order n must exceed every matched pattern order");

  // Default bases: the canonically first k thorough indecomposable
  // permutations of order n, plus the descent (n,...,1), which is always
  // thorough and canonically last. Keeping it in the family gives downstream
  // constructions a witness whose occurrences stay cheap to count at large
  // orders.
  std::vector<Permutation> pool;
  for (auto& p : enumerate_patterns(n, PatternClass::Thorough, false))
    if (p.order() == n && is_indecomposable(p)) pool.push_back(std::move(p));
  if (static_cast<int>(pool.size()) < k + 1)
    throw ContractError("borsuk_pair_search: only " + std::to_string(pool.size()) +
                        " thorough indecomposable permutations of order " +
                        std::to_string(n) + ", need " + std::to_string(k + 1));
  std::vector<Permutation> bases(pool.begin(), pool.begin() + k);
  bases.push_back(Permutation::reversal(n));
  return borsuk_pair_search(matched, std::move(bases), seed, budget, residual_tol,
                            preferred_witness);
}

AntipodalPair borsuk_pair_search(const std::vector<Permutation>& matched,
                                 std::vector<Permutation> bases, std::uint64_t seed,
                                 int budget, double residual_tol,
                                 std::optional<int> preferred_witness) {
  const int k = static_cast<int>(matched.size());
  if (k < 1) throw ContractError("borsuk_pair_search: matched family is empty");
  const int m = static_cast<int>(bases.size());
  if (m < k + 1)
    throw ContractError("borsuk_pair_search: need at least " + std::to_string(k + 1) +
                        " bases for " + std::to_string(k) + " matched patterns");
  const int n = bases.front().order();
  for (const auto& b : bases) {
    if (b.order() != n)
      throw ContractError("borsuk_pair_search: bases must share a common order");
    if (!is_thorough(b) || !is_indecomposable(b))
      throw ContractError("borsuk_pair_search: base " + b.str() +
                          " is not thorough indecomposable");
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (bases[static_cast<size_t>(i)] == bases[static_cast<size_t>(j)])
        throw ContractError("borsuk_pair_search: duplicate base " +
                            bases[static_cast<size_t>(i)].str());
  for (const auto& tau : matched)
    if (tau.order() >= n)
      throw ContractError("borsuk_pair_search: base order must exceed every matched pattern order");
  if (preferred_witness && (*preferred_witness < 0 || *preferred_witness >= m))
    throw ContractError("borsuk_pair_search: preferred witness index out of range");

  std::vector<Permuton> parts;
  parts.reserve(bases.size());
  for (const auto& b : bases)
    parts.push_back(Permuton::stepup(b, std::vector<Rat>(static_cast<size_t>(n), Rat(1, n))));
  MixtureGamma gamma(matched, parts);

  const double center = 1.0 / (2.0 * m);
  const double radius = 1.0 / (4.0 * m);
  constexpr double kMinWitness = 0.05;

  auto eval_g = [&](const std::vector<double>& d, std::vector<double>& g) {
    std::vector<double> u(static_cast<size_t>(m)), up(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      u[static_cast<size_t>(i)] = center + radius * d[static_cast<size_t>(i)];
      up[static_cast<size_t>(i)] = center - radius * d[static_cast<size_t>(i)];
    }
    static thread_local std::vector<double> a, b;
    gamma.eval(u, a);
    gamma.eval(up, b);
    g.resize(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) g[static_cast<size_t>(j)] = a[static_cast<size_t>(j)] - b[static_cast<size_t>(j)];
  };

  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };

  AntipodalPair best;
  best.matched = matched;
  best.bases = bases;
  best.n = n;
  best.seed = seed;
  best.residual = std::numeric_limits<double>::infinity();

  auto finish = [&](const std::vector<double>& d) {
    AntipodalPair out = best;
    out.v.resize(static_cast<size_t>(m));
    out.v_prime.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      out.v[static_cast<size_t>(i)] = center + radius * d[static_cast<size_t>(i)];
      out.v_prime[static_cast<size_t>(i)] = center - radius * d[static_cast<size_t>(i)];
    }
    // Exact residual at the (dyadic) returned weights.
    const Permuton phi = out.mixture(false), phip = out.mixture(true);
    Rat worst(0);
    for (const auto& tau : matched) {
      Rat diff = exact_density(tau, phi) - exact_density(tau, phip);
      if (diff < 0) diff = -diff;
      worst = std::max(worst, diff);
    }
    out.residual = rat_double(worst);
    int arg = 0;
    for (int i = 1; i < m; ++i)
      if (std::abs(d[static_cast<size_t>(i)]) > std::abs(d[static_cast<size_t>(arg)])) arg = i;
    out.witness = preferred_witness ? *preferred_witness : arg;
    out.converged =
        out.residual <= residual_tol &&
        std::abs(d[static_cast<size_t>(out.witness)]) >= kMinWitness;
    return out;
  };

  if (k == 1 && m == 2) {
    // Scalar case: one equation on a circle; g(theta) and g(theta + pi) have
    // opposite signs, so bisection finds a root.
    auto g_at = [&](double theta) {
      std::vector<double> d{std::cos(theta), std::sin(theta)}, g;
      eval_g(d, g);
      return g[0];
    };
    double lo = 0.0, hi = 3.14159265358979323846;
    double flo = g_at(lo);
    if (std::abs(flo) > 0) {
      if (g_at(hi) * flo > 0) throw Error("borsuk_pair_search: odd map sign check failed");
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = g_at(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (fm * flo > 0) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
    }
    const double theta = 0.5 * (lo + hi);
    auto out = finish({std::cos(theta), std::sin(theta)});
    if (!out.converged && out.residual <= residual_tol && preferred_witness) {
      // root sits near a coordinate axis; fall through to multi-start below
    } else {
      return out;
    }
  }

  // Levenberg-Marquardt on the sphere with random restarts.
  const double h = 1e-6;
  for (int start = 0; start < budget; ++start) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(start) + 1));
    std::vector<double> d(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      // Box-Muller
      const double u1 = std::max(rng.uniform01(), 1e-300), u2 = rng.uniform01();
      d[static_cast<size_t>(i)] =
          std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    double nn = std::sqrt(norm2(d));
    if (nn == 0.0) continue;
    for (auto& x : d) x /= nn;

    std::vector<double> g;
    eval_g(d, g);
    double f = norm2(g);
    double lambda = 1e-8;
    for (int iter = 0; iter < 120 && f > residual_tol * residual_tol * 0.01; ++iter) {
      // numeric Jacobian J[j][i]
      std::vector<std::vector<double>> jac(static_cast<size_t>(k),
                                           std::vector<double>(static_cast<size_t>(m)));
      for (int i = 0; i < m; ++i) {
        auto dp = d, dm = d;
        dp[static_cast<size_t>(i)] += h;
        dm[static_cast<size_t>(i)] -= h;
        std::vector<double> gp, gm;
        eval_g(dp, gp);
        eval_g(dm, gm);
        for (int j = 0; j < k; ++j)
          jac[static_cast<size_t>(j)][static_cast<size_t>(i)] =
              (gp[static_cast<size_t>(j)] - gm[static_cast<size_t>(j)]) / (2.0 * h);
      }
      // normal equations
      std::vector<std::vector<double>> a(static_cast<size_t>(m),
                                         std::vector<double>(static_cast<size_t>(m), 0.0));
      std::vector<double> rhs(static_cast<size_t>(m), 0.0);
      for (int i1 = 0; i1 < m; ++i1) {
        for (int i2 = 0; i2 < m; ++i2)
          for (int j = 0; j < k; ++j)
            a[static_cast<size_t>(i1)][static_cast<size_t>(i2)] +=
                jac[static_cast<size_t>(j)][static_cast<size_t>(i1)] *
                jac[static_cast<size_t>(j)][static_cast<size_t>(i2)];
        for (int j = 0; j < k; ++j)
          rhs[static_cast<size_t>(i1)] -= jac[static_cast<size_t>(j)][static_cast<size_t>(i1)] *
                                          g[static_cast<size_t>(j)];
      }
      std::vector<double> step;
      if (!solve_damped(a, rhs, lambda, step)) break;
      auto cand = d;
      for (int i = 0; i < m; ++i) cand[static_cast<size_t>(i)] += step[static_cast<size_t>(i)];
      const double cn = std::sqrt(norm2(cand));
      if (cn == 0.0) break;
      for (auto& x : cand) x /= cn;
      std::vector<double> gc;
      eval_g(cand, gc);
      const double fc = norm2(gc);
      if (fc < f) {
        d = cand;
        g = gc;
        f = fc;
        lambda = std::max(lambda * 0.3, 1e-12);
      } else {
        lambda *= 10.0;
        if (lambda > 1e8) break;
      }
    }
    if (f <= residual_tol * residual_tol) {
      auto out = finish(d);
      if (out.converged) return out;
      if (out.residual < best.residual) best = out;
    } else if (std::sqrt(f) < best.residual) {
      auto out = finish(d);
      if (out.converged) return out;
      if (out.residual < best.residual) best = out;
    }
  }
  if (best.v.empty()) {
    // No iterate was ever evaluated to completion; report the center pair.
    best = finish(std::vector<double>(static_cast<size_t>(m), 1.0 / std::sqrt(m)));
    best.converged = false;
  }
  return best;
}

GapPair gap_pair_search(const std::vector<Permutation>& matched, const Permutation& witness,
                        std::uint64_t seed, int budget, double residual_tol) {
  const int k = static_cast<int>(matched.size());
  if (k < 1) throw ContractError("gap_pair_search: matched family is empty");
  const int q = witness.order();
  if (!is_thorough(witness) || !is_indecomposable(witness))
    throw ContractError("gap_pair_search: witness " + witness.str() +
                        " must be thorough and indecomposable");
  for (const auto& tau : matched)
    if (tau.order() >= q)
      throw ContractError("gap_pair_search: witness order must exceed every matched pattern order");

  auto uniform_su = [](const Permutation& b) {
    return Permuton::stepup(b, std::vector<Rat>(static_cast<size_t>(b.order()), Rat(1, b.order())));
  };

  // Blocks: uniform step-ups of every non-identity pattern of order 2..q-1
  // on both sides; phi additionally leads with a step-up of the witness
  // itself. The block bases give each side the same reachable density set,
  // so the equations only have to absorb the witness block.
  std::vector<Permutation> block_bases;
  for (auto& p : enumerate_patterns(q - 1, PatternClass::All, false))
    if (p.order() >= 2 && p != Permutation::identity(p.order()))
      block_bases.push_back(std::move(p));
  if (block_bases.empty())
    throw ContractError("gap_pair_search: no blocks available below order " + std::to_string(q));

  std::vector<Permuton> parts_a, parts_b;
  parts_a.push_back(uniform_su(witness));
  for (const auto& b : block_bases) parts_a.push_back(uniform_su(b));
  for (const auto& b : block_bases) parts_b.push_back(uniform_su(b));
  MixtureGamma eval_a(matched, parts_a), eval_b(matched, parts_b);

  // Witness mass by order. The matching equations admit solutions only up
  // to a ceiling on the witness mass that shrinks with the order (root
  // tracking hits a fold around 0.08 at order 5); these values sit safely
  // below the ceiling while keeping the gap q!/q^q * g^q exactly rational.
  const Rat g_mass = q <= 4 ? Rat(1, 5) : (q == 5 ? Rat(1, 16) : Rat(1, 64));
  const double g = rat_double(g_mass);
  const size_t na = block_bases.size();        // free masses on the phi side
  const size_t nb = block_bases.size();        // free masses on the phi' side
  const size_t nz = na + nb;

  // Free masses are squares of the optimization variables scaled by
  // cap/(1 + sum of squares), so a block can leave the mixture smoothly
  // instead of parking on a clamp boundary and each side's total stays
  // strictly under cap without a rescale kink (a hard rescale would make
  // global scaling of z a null direction and degenerate the Jacobian).
  // cap equals the full leftover so the diagonal tail may shrink to zero;
  // roots at higher orders tend to use nearly all of the mass.
  // g_cur is the homotopy copy of the witness mass: at zero, equal blocks
  // on the two sides are an exact root, and the root is tracked as the
  // mass grows to its final value.
  double g_cur = g;
  auto masses = [&](const std::vector<double>& z, std::vector<double>& ua,
                    std::vector<double>& ub) {
    const double cap_a = 1.0 - g_cur, cap_b = 1.0;
    ua.resize(na + 1);
    ub.resize(nb);
    ua[0] = g_cur;
    double sa = 1.0, sb = 1.0;
    for (size_t i = 0; i < na; ++i) sa += z[i] * z[i];
    for (size_t i = 0; i < nb; ++i) sb += z[na + i] * z[na + i];
    for (size_t i = 0; i < na; ++i) ua[i + 1] = cap_a * z[i] * z[i] / sa;
    for (size_t i = 0; i < nb; ++i) ub[i] = cap_b * z[na + i] * z[na + i] / sb;
  };

  auto eval_r = [&](const std::vector<double>& z, std::vector<double>& r) {
    static thread_local std::vector<double> ua, ub, da, db;
    masses(z, ua, ub);
    eval_a.eval(ua, da);
    eval_b.eval(ub, db);
    r.resize(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) r[static_cast<size_t>(j)] = da[static_cast<size_t>(j)] - db[static_cast<size_t>(j)];
  };

  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };

  GapPair best;
  best.matched = matched;
  best.witness = witness;
  best.seed = seed;
  best.residual = std::numeric_limits<double>::infinity();

  auto finish = [&](const std::vector<double>& z) {
    GapPair out = best;
    g_cur = g;
    std::vector<double> ua, ub;
    masses(z, ua, ub);
    std::vector<PermutonPart> pa, pb;
    pa.push_back(PermutonPart{g_mass, parts_a[0]});
    for (size_t i = 0; i < na; ++i)
      if (ua[i + 1] > 1e-12)
        pa.push_back(PermutonPart{rat_from_double(ua[i + 1]), parts_a[i + 1]});
    for (size_t i = 0; i < nb; ++i)
      if (ub[i] > 1e-12)
        pb.push_back(PermutonPart{rat_from_double(ub[i]), parts_b[i]});
    if (pb.empty()) pb.push_back(PermutonPart{Rat(1, 100), parts_b[0]});
    out.phi = Permuton::dsum(std::move(pa));
    out.phi_prime = Permuton::dsum(std::move(pb));
    Rat worst(0);
    for (const auto& tau : matched) {
      Rat diff = exact_density(tau, out.phi) - exact_density(tau, out.phi_prime);
      if (diff < 0) diff = -diff;
      worst = std::max(worst, diff);
    }
    out.residual = rat_double(worst);
    out.gamma = exact_density(witness, out.phi) - exact_density(witness, out.phi_prime);
    out.converged = out.residual <= residual_tol && out.gamma > 0;
    return out;
  };

  const double h = 1e-6;
  const double f_target = std::pow(std::min(residual_tol, 1e-10), 2);
  const bool dbg = std::getenv("PERMLAB_DEBUG_GAP") != nullptr;

  auto run_lm = [&](std::vector<double>& z, double ftarget, int iters) {
    std::vector<double> r;
    eval_r(z, r);
    double f = norm2(r);
    double lambda = 1e-10;
    for (int iter = 0; iter < iters && f > ftarget; ++iter) {
      std::vector<std::vector<double>> jac(static_cast<size_t>(k), std::vector<double>(nz));
      for (size_t i = 0; i < nz; ++i) {
        const double hi = h * std::max(1.0, std::abs(z[i]));
        auto zp = z, zm = z;
        zp[i] += hi;
        zm[i] -= hi;
        std::vector<double> rp, rm;
        eval_r(zp, rp);
        eval_r(zm, rm);
        for (int j = 0; j < k; ++j)
          jac[static_cast<size_t>(j)][i] =
              (rp[static_cast<size_t>(j)] - rm[static_cast<size_t>(j)]) / (2.0 * hi);
      }
      std::vector<std::vector<double>> a(nz, std::vector<double>(nz, 0.0));
      std::vector<double> rhs(nz, 0.0);
      for (size_t i1 = 0; i1 < nz; ++i1) {
        for (size_t i2 = 0; i2 < nz; ++i2)
          for (int j = 0; j < k; ++j)
            a[i1][i2] += jac[static_cast<size_t>(j)][i1] * jac[static_cast<size_t>(j)][i2];
        for (int j = 0; j < k; ++j)
          rhs[i1] -= jac[static_cast<size_t>(j)][i1] * r[static_cast<size_t>(j)];
      }
      std::vector<double> step;
      if (!solve_damped(a, rhs, lambda, step)) break;
      auto cand = z;
      for (size_t i = 0; i < nz; ++i) cand[i] += step[i];
      std::vector<double> rc;
      eval_r(cand, rc);
      const double fc = norm2(rc);
      if (fc < f) {
        z = cand;
        r = rc;
        f = fc;
        lambda = std::max(lambda * 0.3, 1e-12);
      } else {
        lambda *= 10.0;
        if (lambda > 1e8) break;
      }
    }
    return f;
  };

  // Track the root from the trivial pair at witness mass zero (equal block
  // masses on both sides) up to the full witness mass; each leg starts
  // inside the Newton basin of the deformed root, and a leg that stalls is
  // retried with half the mass step.
  for (int start = 0; start < budget; ++start) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(start)));
    std::vector<double> z(nz);
    for (size_t i = 0; i < na; ++i) z[i] = 0.25 + 0.5 * rng.uniform01();
    for (size_t i = 0; i < nb; ++i) z[na + i] = z[i];

    double g_at = 0.0, step = g / 8.0;
    bool ok = true;
    while (g_at < g) {
      const double g_try = std::min(g_at + step, g);
      g_cur = g_try;
      auto z_try = z;
      const double f = run_lm(z_try, 1e-16, 300);
      if (dbg)
        std::fprintf(stderr, "gap start=%d g=%.4f step=%.4f f=%.3e\n", start, g_try, step, f);
      if (f <= 1e-10) {
        z = std::move(z_try);
        g_at = g_try;
        if (f <= 1e-14 && step < g / 4.0) step *= 1.6;
      } else {
        step *= 0.5;
        if (step < g / 1024.0) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      g_cur = g;
      const double f = run_lm(z, f_target, 600);
      // Gate on the max per-equation residual: that is what finish() checks
      // exactly, and an l2 gate would overstate it by sqrt(#equations).
      std::vector<double> rfin;
      eval_r(z, rfin);
      double rmax = 0.0;
      for (double ri : rfin) rmax = std::max(rmax, std::abs(ri));
      if (dbg)
        std::fprintf(stderr, "gap start=%d polish f=%.3e rmax=%.3e\n", start, f, rmax);
      if (rmax <= residual_tol) {
        auto out = finish(z);
        if (out.converged) return out;
        if (out.residual < best.residual) best = out;
      }
    }
  }
  if (std::isinf(best.residual)) {
    best = finish(std::vector<double>(nz, 0.3));
    best.converged = false;
  }
  return best;
}

}  // namespace permlab
