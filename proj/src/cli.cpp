#include "permlab/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "permlab/compressive.hpp"
#include "permlab/param_testing.hpp"
#include "permlab/pattern_count.hpp"
#include "permlab/permutation.hpp"
#include "permlab/permuton.hpp"
#include "permlab/rational.hpp"
#include "permlab/spectra.hpp"

namespace permlab::cli {
namespace {

using nlohmann::json;

json rat_json(const Rat& r) { return rat_str(r); }

// ----- output formats -------------------------------------------------------

void render_tsv_value(std::ostream& out, const json& v) {
  if (v.is_string())
    out << v.get<std::string>();
  else
    out << v.dump();
}

// TSV: an array of objects becomes header + rows; anything else becomes
// key<TAB>value lines with dotted paths.
void render_tsv(std::ostream& out, const json& j, const std::string& prefix) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      const std::string path = prefix.empty() ? k : prefix + "." + k;
      if (v.is_object() || v.is_array()) {
        render_tsv(out, v, path);
      } else {
        out << path << '\t';
        render_tsv_value(out, v);
        out << '\n';
      }
    }
    return;
  }
  if (j.is_array()) {
    const bool table = !j.empty() && std::all_of(j.begin(), j.end(), [](const json& e) {
      return e.is_object() && std::none_of(e.begin(), e.end(), [](const json& f) {
        return f.is_object() || f.is_array();
      });
    });
    if (table) {
      std::vector<std::string> cols;
      for (const auto& [k, v] : j.front().items()) {
        (void)v;
        cols.push_back(k);
      }
      out << prefix;
      for (size_t c = 0; c < cols.size(); ++c) out << (c ? "\t" : ":\t") << cols[c];
      out << '\n';
      for (const auto& row : j) {
        out << prefix;
        for (size_t c = 0; c < cols.size(); ++c) {
          out << (c ? "\t" : ":\t");
          if (row.contains(cols[c])) render_tsv_value(out, row.at(cols[c]));
        }
        out << '\n';
      }
      return;
    }
    for (size_t i = 0; i < j.size(); ++i)
      render_tsv(out, j[i], prefix + "[" + std::to_string(i) + "]");
    return;
  }
  out << prefix << '\t';
  render_tsv_value(out, j);
  out << '\n';
}

void render_human(std::ostream& out, const json& j, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_object() || (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array()))) {
        out << pad << k << ":\n";
        render_human(out, v, indent + 1);
      } else {
        out << pad << k << ": ";
        if (v.is_array()) {
          for (size_t i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            render_tsv_value(out, v[i]);
          }
          out << '\n';
        } else {
          render_tsv_value(out, v);
          out << '\n';
        }
      }
    }
    return;
  }
  if (j.is_array()) {
    for (const auto& e : j) {
      out << pad << "-\n";
      render_human(out, e, indent + 1);
    }
    return;
  }
  out << pad;
  render_tsv_value(out, j);
  out << '\n';
}

void emit(std::ostream& out, const json& j, const std::string& format) {
  if (format == "json") {
    out << j.dump(2) << '\n';
  } else if (format == "tsv") {
    render_tsv(out, j, "");
  } else {
    render_human(out, j, 0);
  }
}

// ----- shared flag plumbing -------------------------------------------------

struct Common {
  std::string format = "json";
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
};

// Reads a permuton from an inline JSON string or from a file path.
Permuton load_permuton(const std::string& inline_json, const std::string& path) {
  if (!inline_json.empty() && !path.empty())
    throw ContractError("give either --permuton or --permuton-file, not both");
  if (!inline_json.empty()) return Permuton::from_json_text(inline_json);
  if (path.empty()) throw ContractError("a permuton is required (--permuton or --permuton-file)");
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open permuton file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Permuton::from_json_text(ss.str());
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ContractError(std::string("cannot open ") + what + " file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + " file " + path + ": " + e.what());
  }
  return j;
}

std::vector<Rat> parse_rational_list(const std::string& text) {
  std::vector<Rat> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_rational(tok));
  if (out.empty()) throw ParseError("empty rational list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ParseError("bad integer in list: '" + tok + "'");
    }
  }
  if (out.empty()) throw ParseError("empty integer list");
  return out;
}

json density_value_json(const DensityValue& v) {
  json j;
  j["value"] = rat_json(v.value);
  j["approx"] = rat_double(v.value);
  j["exact"] = v.exact;
  if (!v.exact) j["std_error"] = v.std_error;
  return j;
}

json vector_json(const DensityVector& v) {
  json entries = json::array();
  for (size_t i = 0; i < v.patterns.size(); ++i) {
    json e = density_value_json(v.values[i]);
    e["pattern"] = v.patterns[i].str();
    entries.push_back(std::move(e));
  }
  return {{"q", v.q},
          {"kind", v.kind == DensityKind::Occurrence ? "occ" : "mon"},
          {"entries", entries}};
}

json spanning_system_json(const SpanningSystem& sys) {
  json j = sys.to_json();
  j["det_v_approx"] = rat_double(sys.det_v);
  return j;
}

json pair_json(const AntipodalPair& pr) {
  json bases = json::array();
  for (const auto& b : pr.bases) bases.push_back(b.str());
  json matched = json::array();
  for (const auto& m : pr.matched) matched.push_back(m.str());
  return {{"matched", matched},
          {"bases", bases},
          {"order", pr.n},
          {"v", pr.v},
          {"v_prime", pr.v_prime},
          {"witness", pr.witness},
          {"residual", pr.residual},
          {"converged", pr.converged},
          {"seed", pr.seed},
          {"phi", pr.mixture(false).to_json()},
          {"phi_prime", pr.mixture(true).to_json()}};
}

// ----- command registration ------------------------------------------------

struct Invocation {
  Common common;
  json result;
  int exit_code = 0;
};

void add_commands(CLI::App& app, Invocation& inv) {
  app.require_subcommand(1);
  app.fallthrough(true);
  auto& c = inv.common;

  app.add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"json", "tsv", "human"}))
      ->capture_default_str();
  app.add_option("--seed", c.seed, "Seed for anything stochastic")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads for sampling loops (output is thread-count independent)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // count -------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "count", "Count pattern occurrences in a host permutation under all three map notions");
    auto pat = std::make_shared<std::string>();
    auto host = std::make_shared<std::string>();
    cmd->add_option("--pattern", *pat, "Pattern, one-line notation")->required();
    cmd->add_option("--in", *host, "Host permutation, one-line notation")->required();
    cmd->callback([&inv, pat, host] {
      const Permutation tau = Permutation::parse(*pat), sigma = Permutation::parse(*host);
      const PatternCounts n = count_patterns(tau, sigma);
      inv.result = {{"pattern", tau.str()},
                    {"in", sigma.str()},
                    {"occ", n.occ},
                    {"mon", n.mon},
                    {"hom", n.hom},
                    {"density_occ", rat_json(density(tau, sigma))},
                    {"density_mon", rat_json(density_mon(tau, sigma))},
                    {"density_hom", rat_json(density_hom(tau, sigma))}};
    });
  }

  // density -----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "density", "Pattern density in a host permutation or exactly in a permuton");
    auto pat = std::make_shared<std::string>();
    auto host = std::make_shared<std::string>();
    auto pj = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto kind = std::make_shared<std::string>("occ");
    cmd->add_option("--pattern", *pat, "Pattern, one-line notation")->required();
    cmd->add_option("--in", *host, "Host permutation");
    cmd->add_option("--permuton", *pj, "Permuton as inline JSON");
    cmd->add_option("--permuton-file", *pf, "Permuton JSON file");
    cmd->add_option("--kind", *kind, "occ, mon or hom (hom only for permutation hosts)")
        ->check(CLI::IsMember({"occ", "mon", "hom"}));
    cmd->callback([&inv, pat, host, pj, pf, kind] {
      const Permutation tau = Permutation::parse(*pat);
      json j = {{"pattern", tau.str()}, {"kind", *kind}};
      if (!host->empty()) {
        if (!pj->empty() || !pf->empty())
          throw ContractError("give a permutation host or a permuton, not both");
        const Permutation sigma = Permutation::parse(*host);
        const Rat v = *kind == "occ"   ? density(tau, sigma)
                      : *kind == "mon" ? density_mon(tau, sigma)
                                       : density_hom(tau, sigma);
        j["in"] = sigma.str();
        j["value"] = rat_json(v);
        j["approx"] = rat_double(v);
      } else {
        const Permuton phi = load_permuton(*pj, *pf);
        if (*kind == "hom") throw ContractError("hom densities are defined for permutation hosts only");
        const Rat v = *kind == "occ" ? exact_density(tau, phi) : density_mon_permuton(tau, phi);
        j["permuton"] = phi.to_json();
        j["value"] = rat_json(v);
        j["approx"] = rat_double(v);
      }
      inv.result = std::move(j);
    });
  }

  // enumerate ---------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("enumerate", "List pattern permutations of bounded order");
    auto max_order = std::make_shared<int>(3);
    auto cls = std::make_shared<std::string>("indecomposable");
    auto trivial = std::make_shared<bool>(false);
    cmd->add_option("--max-order", *max_order, "Largest order to include")->required();
    cmd->add_option("--class", *cls, "Pattern class filter")
        ->check(CLI::IsMember({"all", "indecomposable", "simple", "thorough"}));
    cmd->add_flag("--include-trivial", *trivial, "Include the order-1 permutation");
    cmd->callback([&inv, max_order, cls, trivial] {
      const PatternClass pc = *cls == "all"             ? PatternClass::All
                              : *cls == "indecomposable" ? PatternClass::Indecomposable
                              : *cls == "simple"         ? PatternClass::Simple
                                                         : PatternClass::Thorough;
      json list = json::array();
      for (const auto& p : enumerate_patterns(*max_order, pc, *trivial)) list.push_back(p.str());
      inv.result = {{"max_order", *max_order},
                    {"class", *cls},
                    {"count", list.size()},
                    {"patterns", list}};
    });
  }

  // compress ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("compress", "All compressive partitions of a permutation with their quotients");
    auto pat = std::make_shared<std::string>();
    cmd->add_option("--tau", *pat, "Permutation, one-line notation")->required();
    cmd->callback([&inv, pat] {
      const Permutation tau = Permutation::parse(*pat);
      json list = json::array();
      for (const auto& part : enumerate_compressive(tau)) {
        json blocks = json::array();
        for (const auto& [a, b] : part.blocks) blocks.push_back({a, b});
        list.push_back({{"blocks", blocks},
                        {"shifts", part.shifts},
                        {"quotient", quotient(tau, part).str()}});
      }
      inv.result = {{"tau", tau.str()},
                    {"thorough", is_thorough(tau)},
                    {"count", list.size()},
                    {"partitions", list}};
    });
  }

  // sample ------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("sample", "Draw random permutations (or raw points) from a permuton");
    auto pj = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto order = std::make_shared<int>(0);
    auto count = std::make_shared<int>(1);
    auto points = std::make_shared<bool>(false);
    cmd->add_option("--permuton", *pj, "Permuton as inline JSON");
    cmd->add_option("--permuton-file", *pf, "Permuton JSON file");
    cmd->add_option("--order", *order, "Order of each sampled permutation")->required();
    cmd->add_option("--count", *count, "How many samples")->check(CLI::PositiveNumber);
    cmd->add_flag("--points", *points, "Emit raw (x, y) points instead of ranked permutations");
    cmd->callback([&inv, &c, pj, pf, order, count, points] {
      const Permuton phi = load_permuton(*pj, *pf);
      json samples = json::array();
      Rng rng(c.seed);
      for (int s = 0; s < *count; ++s) {
        if (*points) {
          json pts = json::array();
          for (int i = 0; i < *order; ++i) {
            const Point p = sample_point(phi, rng);
            pts.push_back({p.x, p.y});
          }
          samples.push_back(std::move(pts));
        } else {
          samples.push_back(sample_permutation(phi, *order, rng).str());
        }
      }
      inv.result = {{"permuton", phi.to_json()},
                    {"order", *order},
                    {"seed", c.seed},
                    {"samples", samples}};
    });
  }

  // stepup-density ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "stepup-density", "Exact density of an indecomposable pattern in a step-up permuton");
    auto pat = std::make_shared<std::string>();
    auto base = std::make_shared<std::string>();
    auto weights = std::make_shared<std::string>();
    cmd->add_option("--tau", *pat, "Indecomposable pattern of order at least 2")->required();
    cmd->add_option("--sigma", *base, "Base permutation")->required();
    cmd->add_option("--weights", *weights, "Comma-separated positive rationals, sum at most 1")->required();
    cmd->callback([&inv, pat, base, weights] {
      const Permutation tau = Permutation::parse(*pat), sigma = Permutation::parse(*base);
      const Rat v = density_stepup(tau, sigma, parse_rational_list(*weights));
      inv.result = {{"tau", tau.str()},
                    {"sigma", sigma.str()},
                    {"value", rat_json(v)},
                    {"approx", rat_double(v)}};
    });
  }

  // dsum-density --------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "dsum-density", "Exact density of an indecomposable pattern in a direct-sum permuton");
    auto pat = std::make_shared<std::string>();
    auto pj = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    cmd->add_option("--tau", *pat, "Indecomposable pattern of order at least 2")->required();
    cmd->add_option("--permuton", *pj, "Direct-sum permuton as inline JSON");
    cmd->add_option("--permuton-file", *pf, "Direct-sum permuton JSON file");
    cmd->callback([&inv, pat, pj, pf] {
      const Permutation tau = Permutation::parse(*pat);
      const Permuton phi = load_permuton(*pj, *pf);
      const auto* node = std::get_if<DirectSumNode>(&phi.node());
      if (!node) throw ContractError("dsum-density expects a top-level direct sum");
      const Rat v = density_dsum(tau, node->parts);
      inv.result = {{"tau", tau.str()},
                    {"permuton", phi.to_json()},
                    {"value", rat_json(v)},
                    {"approx", rat_double(v)}};
    });
  }

  // mc-density ----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "mc-density", "Monte Carlo pattern density in a permuton, with the exact value for reference");
    auto pat = std::make_shared<std::string>();
    auto pj = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto samples = std::make_shared<std::uint64_t>(100000);
    auto mon = std::make_shared<bool>(false);
    cmd->add_option("--pattern", *pat, "Pattern, one-line notation")->required();
    cmd->add_option("--permuton", *pj, "Permuton as inline JSON");
    cmd->add_option("--permuton-file", *pf, "Permuton JSON file");
    cmd->add_option("--samples", *samples, "Sample count")->check(CLI::PositiveNumber);
    cmd->add_flag("--mon", *mon, "Estimate the monomorphism density instead");
    cmd->callback([&inv, &c, pat, pj, pf, samples, mon] {
      const Permutation tau = Permutation::parse(*pat);
      const Permuton phi = load_permuton(*pj, *pf);
      const McEstimate est = *mon ? density_mon_mc(tau, phi, *samples, c.seed, c.threads)
                                  : density_mc(tau, phi, *samples, c.seed, c.threads);
      json j = {{"pattern", tau.str()},
                {"permuton", phi.to_json()},
                {"kind", *mon ? "mon" : "occ"},
                {"estimate", est.estimate},
                {"std_error", est.std_error},
                {"samples", est.samples},
                {"seed", c.seed}};
      if (!*mon || tau.order() <= kEnumerationCap) {
        const Rat exact = *mon ? density_mon_permuton(tau, phi) : exact_density(tau, phi);
        j["exact"] = rat_json(exact);
        j["exact_approx"] = rat_double(exact);
      }
      inv.result = std::move(j);
    });
  }

  // matrix --------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "matrix", "Occurrence-to-monomorphism transfer matrix on the canonical pattern list");
    auto q = std::make_shared<int>(3);
    cmd->add_option("--q", *q, "Largest pattern order")->required();
    cmd->callback([&inv, q] {
      const MonMatrix m = mon_matrix(*q);
      json pats = json::array();
      for (const auto& p : m.patterns) pats.push_back(p.str());
      inv.result = {{"q", m.q}, {"patterns", pats}, {"entries", m.entries}};
    });
  }

  // vector --------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "vector", "Density vector over the canonical pattern list, for a permutation or a permuton");
    auto host = std::make_shared<std::string>();
    auto pj = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto q = std::make_shared<int>(3);
    auto kind = std::make_shared<std::string>("occ");
    auto transform = std::make_shared<std::string>();
    cmd->add_option("--in", *host, "Host permutation");
    cmd->add_option("--permuton", *pj, "Permuton as inline JSON");
    cmd->add_option("--permuton-file", *pf, "Permuton JSON file");
    cmd->add_option("--q", *q, "Largest pattern order")->required();
    cmd->add_option("--kind", *kind, "occ or mon")->check(CLI::IsMember({"occ", "mon"}));
    cmd->add_option("--transform", *transform, "Also apply the transfer matrix: to-mon or to-occ")
        ->check(CLI::IsMember({"to-mon", "to-occ"}));
    cmd->callback([&inv, host, pj, pf, q, kind, transform] {
      const DensityKind dk = *kind == "occ" ? DensityKind::Occurrence : DensityKind::Monomorphism;
      DensityVector v = host->empty() ? density_vector(load_permuton(*pj, *pf), *q, dk)
                                      : density_vector(Permutation::parse(*host), *q, dk);
      json j = vector_json(v);
      if (!host->empty()) j["in"] = *host;
      if (!transform->empty()) {
        const MonMatrix m = mon_matrix(*q);
        const TransformDirection dir = *transform == "to-mon" ? TransformDirection::OccToMon
                                                              : TransformDirection::MonToOcc;
        j["transformed"] = vector_json(transform_vector(v, m, dir));
      }
      inv.result = std::move(j);
    });
  }

  // span ----------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "span", "Search for step-up permutons whose density vectors span the canonical pattern space");
    auto q = std::make_shared<int>(3);
    auto attempts = std::make_shared<int>(500);
    cmd->add_option("--q", *q, "Largest pattern order")->required();
    cmd->add_option("--max-attempts", *attempts, "Random draws before giving up");
    cmd->callback([&inv, &c, q, attempts] {
      inv.result = spanning_system_json(find_spanning_system(*q, c.seed, *attempts));
      inv.result["seed"] = c.seed;
    });
  }

  // jacobian ------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "jacobian", "Exact Jacobian of the mixture density map at a rational point");
    auto sys_file = std::make_shared<std::string>();
    auto q = std::make_shared<int>(0);
    auto x = std::make_shared<std::string>();
    cmd->add_option("--system", *sys_file, "Spanning system JSON file (from span)");
    cmd->add_option("--q", *q, "Build a fresh system for this order instead");
    cmd->add_option("--x", *x, "Comma-separated rationals, one per system row")->required();
    cmd->callback([&inv, &c, sys_file, q, x] {
      SpanningSystem sys;
      if (!sys_file->empty())
        sys = SpanningSystem::from_json(read_json_file(*sys_file, "spanning system"));
      else if (*q > 0)
        sys = find_spanning_system(*q, c.seed);
      else
        throw ContractError("give --system or --q");
      const auto xs = parse_rational_list(*x);
      const JacobianResult jr = mixture_jacobian(sys, xs);
      json rows = json::array();
      for (const auto& row : jr.matrix) {
        json r = json::array();
        for (const auto& e : row) r.push_back(rat_json(e));
        rows.push_back(std::move(r));
      }
      json xj = json::array();
      for (const auto& e : xs) xj.push_back(rat_json(e));
      inv.result = {{"x", xj},
                    {"jacobian", rows},
                    {"det", rat_json(jr.det)},
                    {"det_approx", rat_double(jr.det)}};
    });
  }

  // certify -------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "certify", "Certify an interior point: random rational x with nonzero exact Jacobian determinant");
    auto q = std::make_shared<int>(3);
    cmd->add_option("--q", *q, "Largest pattern order")->required();
    cmd->callback([&inv, &c, q] {
      const InteriorWitness w = certify_interior_point(*q, c.seed);
      json xj = json::array(), wj = json::array();
      for (const auto& e : w.x) xj.push_back(rat_json(e));
      for (const auto& e : w.w) wj.push_back(rat_json(e));
      inv.result = {{"system", spanning_system_json(w.system)},
                    {"x", xj},
                    {"w", wj},
                    {"det_jac", rat_json(w.det_jac)},
                    {"det_jac_approx", rat_double(w.det_jac)},
                    {"seed", c.seed}};
    });
  }

  // borsuk --------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "borsuk", "Antipodal search: two step-up mixtures agreeing on a matched pattern family");
    auto matched = std::make_shared<std::string>();
    auto matched_order = std::make_shared<int>(0);
    auto order = std::make_shared<int>(4);
    auto bases = std::make_shared<std::string>();
    auto budget = std::make_shared<int>(64);
    auto tol = std::make_shared<double>(1e-8);
    auto witness = std::make_shared<int>(-1);
    cmd->add_option("--matched", *matched, "Semicolon-separated patterns to match");
    cmd->add_option("--matched-max-order", *matched_order,
                    "Match every non-identity pattern up to this order instead");
    cmd->add_option("--order", *order, "Order of the step-up bases")->required();
    cmd->add_option("--bases", *bases,
                    "Explicit semicolon-separated base family (overrides the default)");
    cmd->add_option("--budget", *budget, "Solver restarts")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", *tol, "Residual tolerance");
    cmd->add_option("--witness", *witness, "Preferred witness base index");
    cmd->callback([&inv, &c, matched, matched_order, order, bases, budget, tol, witness] {
      std::vector<Permutation> fam;
      if (!matched->empty()) {
        std::stringstream ss(*matched);
        std::string tok;
        while (std::getline(ss, tok, ';')) fam.push_back(Permutation::parse(tok));
      } else if (*matched_order >= 2) {
        for (auto& p : enumerate_patterns(*matched_order, PatternClass::All, false))
          if (p != Permutation::identity(p.order())) fam.push_back(std::move(p));
      } else {
        throw ContractError("give --matched or --matched-max-order");
      }
      std::optional<int> pref;
      if (*witness >= 0) pref = *witness;
      AntipodalPair pr;
      if (!bases->empty()) {
        std::vector<Permutation> fam_b;
        std::stringstream ss(*bases);
        std::string tok;
        while (std::getline(ss, tok, ';')) fam_b.push_back(Permutation::parse(tok));
        pr = borsuk_pair_search(fam, std::move(fam_b), c.seed, *budget, *tol, pref);
      } else {
        pr = borsuk_pair_search(fam, *order, c.seed, *budget, *tol, pref);
      }
      inv.result = pair_json(pr);
      if (!pr.converged) {
        inv.exit_code = 2;
        throw SearchError("antipodal search did not converge (residual " +
                          std::to_string(pr.residual) + ")");
      }
    });
  }

  // fbullet -------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "fbullet", "Build the oscillating parameter, or evaluate it on a permutation");
    auto build = std::make_shared<bool>(false);
    auto terms = std::make_shared<int>(3);
    auto q_start = std::make_shared<int>(2);
    auto param_file = std::make_shared<std::string>();
    auto sigma = std::make_shared<std::string>();
    cmd->add_flag("--build", *build, "Construct the parameter and print it");
    cmd->add_option("--terms", *terms, "Terms for --build")->check(CLI::PositiveNumber);
    cmd->add_option("--q-start", *q_start, "Order of the first pattern for --build")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--param", *param_file, "Parameter JSON file (from --build)");
    cmd->add_option("--sigma", *sigma, "Permutation to evaluate on");
    cmd->callback([&inv, &c, build, terms, q_start, param_file, sigma] {
      if (*build) {
        const OscillatingParam p = build_oscillating_param(*q_start, *terms, c.seed);
        inv.result = p.to_json();
        inv.result["seed"] = c.seed;
        return;
      }
      if (param_file->empty() || sigma->empty())
        throw ContractError("evaluation needs --param and --sigma (or use --build)");
      const OscillatingParam p = OscillatingParam::from_json(read_json_file(*param_file, "parameter"));
      const Permutation s = Permutation::parse(*sigma);
      const Rat v = evaluate_param(p, s);
      json terms_j = json::array();
      const auto dens = term_densities(p, s);
      for (size_t i = 0; i < dens.size(); ++i)
        terms_j.push_back({{"tau", p.taus[i].str()},
                           {"alpha", rat_json(p.alphas[i])},
                           {"density", rat_json(dens[i])}});
      inv.result = {{"sigma", s.str()},
                    {"value", rat_json(v)},
                    {"approx", rat_double(v)},
                    {"terms", terms_j}};
    });
  }

  // tester --------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "tester", "Estimate the parameter by the pattern of a random position subset");
    auto param_file = std::make_shared<std::string>();
    auto terms = std::make_shared<int>(0);
    auto q_start = std::make_shared<int>(2);
    auto sigma = std::make_shared<std::string>();
    auto random_order = std::make_shared<int>(0);
    auto n0 = std::make_shared<int>(50);
    auto samples = std::make_shared<std::uint64_t>(200);
    auto epsilon = std::make_shared<double>(0.01);
    cmd->add_option("--param", *param_file, "Parameter JSON file");
    cmd->add_option("--build-terms", *terms, "Build the parameter in-process with this many terms");
    cmd->add_option("--q-start", *q_start, "Order of the first pattern for --build-terms")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--sigma", *sigma, "Permutation under test");
    cmd->add_option("--random-order", *random_order, "Use a uniform random permutation of this order");
    cmd->add_option("--n0", *n0, "Subsample order")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", *samples, "Subsample draws")->check(CLI::PositiveNumber);
    cmd->add_option("--epsilon", *epsilon, "Failure threshold on |estimate - truth|");
    cmd->callback([&inv, &c, param_file, terms, q_start, sigma, random_order, n0, samples,
                   epsilon] {
      OscillatingParam p;
      if (!param_file->empty())
        p = OscillatingParam::from_json(read_json_file(*param_file, "parameter"));
      else if (*terms > 0)
        p = build_oscillating_param(*q_start, *terms, Rng::derive(c.seed, 0));
      else
        throw ContractError("give --param or --build-terms");
      Permutation s = Permutation::identity(1);
      if (!sigma->empty()) {
        s = Permutation::parse(*sigma);
      } else if (*random_order > 0) {
        Rng rng(Rng::derive(c.seed, 1));
        s = random_permutation(*random_order, rng);
      } else {
        throw ContractError("give --sigma or --random-order");
      }
      TesterConfig cfg;
      cfg.epsilon = *epsilon;
      cfg.n0 = *n0;
      cfg.samples = *samples;
      cfg.seed = Rng::derive(c.seed, 2);
      const TesterReport rep = estimate_by_subsampling(p, s, cfg);
      inv.result = rep.to_json();
      inv.result["seed"] = c.seed;
      inv.result["epsilon"] = *epsilon;
    });
  }

  // forcing -------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "forcing", "Contrast vanishing low-order density gaps with the persistent parameter gap");
    auto param_file = std::make_shared<std::string>();
    auto terms = std::make_shared<int>(0);
    auto q_start = std::make_shared<int>(2);
    auto k = std::make_shared<int>(2);
    auto orders = std::make_shared<std::string>("200,500,1000");
    auto pairs = std::make_shared<int>(20);
    cmd->add_option("--param", *param_file, "Parameter JSON file");
    cmd->add_option("--build-terms", *terms, "Build the parameter in-process with this many terms");
    cmd->add_option("--q-start", *q_start, "Order of the first pattern for --build-terms")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--k", *k, "Term whose permuton pair drives the sampling");
    cmd->add_option("--orders", *orders, "Comma-separated sample orders")->capture_default_str();
    cmd->add_option("--pairs", *pairs, "Pairs per order")->check(CLI::PositiveNumber);
    cmd->callback([&inv, &c, param_file, terms, q_start, k, orders, pairs] {
      OscillatingParam p;
      if (!param_file->empty())
        p = OscillatingParam::from_json(read_json_file(*param_file, "parameter"));
      else if (*terms > 0)
        p = build_oscillating_param(*q_start, *terms, Rng::derive(c.seed, 0));
      else
        throw ContractError("give --param or --build-terms");
      const ForcingReport rep =
          forcing_failure_experiment(p, *k, parse_int_list(*orders), Rng::derive(c.seed, 1), *pairs);
      inv.result = rep.to_json();
      inv.result["seed"] = c.seed;
    });
  }

  // stats ---------------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "stats", "Fractions of indecomposable and simple permutations among uniform samples");
    auto n = std::make_shared<int>(100);
    auto samples = std::make_shared<std::uint64_t>(100000);
    cmd->add_option("--n", *n, "Permutation order")->required();
    cmd->add_option("--samples", *samples, "Sample count")->check(CLI::PositiveNumber);
    cmd->callback([&inv, &c, n, samples] {
      const UniformStats st = sample_uniform_statistics(*n, *samples, c.seed, c.threads);
      inv.result = {{"n", *n},
                    {"samples", st.samples},
                    {"seed", c.seed},
                    {"fraction_indecomposable", st.fraction_indecomposable},
                    {"fraction_simple", st.fraction_simple}};
    });
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"permlab: pattern densities of permutations and permutons"};
  Invocation inv;
  add_commands(app, inv);

  std::string command;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  } catch (const CLI::ParseError& e) {
    // --help lands here too; CLI11 distinguishes via exit code 0.
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    const bool search = dynamic_cast<const SearchError*>(&e) != nullptr;
    json j = {{"schema", kSchema},
              {"command", command},
              {"error", {{"type", search ? "search" : "input"}, {"message", e.what()}}}};
    if (!inv.result.is_null()) j["partial"] = inv.result;
    out << j.dump(2) << '\n';
    err << "error: " << e.what() << '\n';
    return search ? 2 : 1;
  } catch (const std::exception& e) {
    json j = {{"schema", kSchema},
              {"command", command},
              {"error", {{"type", "internal"}, {"message", e.what()}}}};
    out << j.dump(2) << '\n';
    err << "error: " << e.what() << '\n';
    return 1;
  }

  json envelope = {{"schema", kSchema}, {"command", command}};
  envelope.update(inv.result);
  emit(out, envelope, inv.common.format);
  return inv.exit_code;
}

}  // namespace permlab::cli
