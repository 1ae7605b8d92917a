// Acceptance suite: runs every gate criterion and prints one line per
// criterion. Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "bbi/proof_json.hpp"
#include "bbi/search.hpp"
#include "bbi/semantics.hpp"
#include "helpers.hpp"

using namespace bbi;
using namespace bbi::testing;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  if (!ok) failures++;
  std::printf("criterion %2d: %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

const std::vector<std::string> kSuite = {
    "(a -* b) & (T * (T* & a)) -> b",
    "(T* -* ~(~a * T*)) -> a",
    "~((a -* ~(a * b)) & ((~a -* ~b) & b))",
    "T* -> ((a -* (b -* c)) -* ((a * b) -* c))",
    "T* -> ((a * (b * c)) -* ((a * b) * c))",
    "T* -> ((a * ((b -* e) * c)) -* ((a * (b -* e)) * c))",
    "~(((a -* ~(~(d -* ~(a * (c * b))) * a)) & c) * (d & (a * b)))",
    "~((c * (d * e)) & ((a -* ~(~(b -* ~(d * (e * c))) * a)) * (b & (a * T))))",
    "~(((a -* ~(~(d -* ~((c * e) * (b * a))) * a)) & c) * (d & (a * (b * e))))",
    "(a * (b * (c * d))) -> (d * (c * (b * a)))",
    "(a * (b * (c * d))) -> (d * (b * (c * a)))",
    "(a * (b * (c * (d * e)))) -> (e * (d * (a * (b * c))))",
    "(a * (b * (c * (d * e)))) -> (e * (b * (a * (c * d))))",
    "T* -> ((a * ((b -* e) * (c * d))) -* ((a * d) * (c * (b -* e))))",
};

std::vector<Derivation> g_proof_corpus;  // accepted proofs gathered along the way

// ---------------------------------------------------------------- criterion 1
void criterion_benchmark_suite() {
  bool ok = true;
  std::ostringstream detail;
  double worst = 0;
  for (size_t i = 0; i < kSuite.size(); i++) {
    Outcome out = prove(parse_formula(kSuite[i]));
    if (!out.proved) {
      ok = false;
      detail << "row " << (i + 1) << " unproved; ";
      continue;
    }
    worst = std::max(worst, out.stats.wall_ms);
    if (out.stats.wall_ms >= 5000.0) {
      ok = false;
      detail << "row " << (i + 1) << " took " << out.stats.wall_ms << " ms; ";
    }
    CheckReport rep = check(out.data->ground, CheckOptions{false, {}});
    if (!rep.accepted) {
      ok = false;
      detail << "row " << (i + 1) << " proof rejected: " << rep.message << "; ";
    }
    // exercise the external proof format as well
    Derivation reread = proof_from_json(proof_to_json(out.data->ground));
    if (!check(reread).accepted) {
      ok = false;
      detail << "row " << (i + 1) << " proof broke in serialization; ";
    }
    g_proof_corpus.push_back(std::move(out.data->ground));
  }
  std::ostringstream s;
  s << "benchmark suite: " << g_proof_corpus.size() << "/14 proved, kernel-checked, worst "
    << static_cast<int>(worst) << " ms. " << detail.str();
  report(1, ok, s.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_unit_expansion_shape() {
  Outcome out = prove(parse_formula("a -> T* * a"));
  bool ok = out.proved;
  std::ostringstream s;
  if (ok) {
    auto counts = out.data->ground.rule_counts();
    ok = counts[RuleId::ImpR] == 1 && counts[RuleId::StarR] == 1 && counts[RuleId::MEmpR] == 1 &&
         counts[RuleId::Id] == 1 && check(out.data->ground).accepted;
    int structural = 0;
    for (const auto& [r, n] : counts)
      if (is_structural(r)) structural += n;
    s << "rule multiset {impR, starR, mempR, id} each once plus " << structural
      << " structural steps";
    if (ok) g_proof_corpus.push_back(out.data->ground);
  } else {
    s << "formula unproved";
  }
  report(2, ok, s.str());
}

// ---------------------------------------------------------------- criterion 3
void criterion_hilbert_axioms() {
  const std::vector<std::string> axioms = {
      "a -> T* * a",
      "T* * a -> a",
      "a * b -> b * a",
      "a * (b * c) -> (a * b) * c",
  };
  bool ok = true;
  std::ostringstream detail;
  for (size_t i = 0; i < axioms.size(); i++) {
    Outcome out = prove(parse_formula(axioms[i]));
    if (!out.proved) {
      ok = false;
      detail << "axiom " << (i + 1) << " unproved; ";
    } else {
      g_proof_corpus.push_back(out.data->ground);
    }
  }
  report(3, ok, "multiplicative axioms 1-4 proved. " + detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_unit_asymmetry() {
  Outcome out = prove(parse_formula("T*"));
  bool unproved = !out.proved && !out.stats.timed_out;

  Sequent s;
  s.rhs.add({EPS(), Formula::memp()});
  Derivation at_eps{RuleId::MEmpR, s, {}, {}};
  bool eps_ok = check(at_eps).accepted;
  if (eps_ok) g_proof_corpus.push_back(at_eps);

  std::ostringstream d;
  d << "generic unit unproved in " << static_cast<int>(out.stats.wall_ms)
    << " ms; hand proof at eps accepted";
  report(4, unproved && eps_ok, d.str());
}

// ---------------------------------------------------------------- criterion 5
void criterion_semantic_variants() {
  struct Case {
    const char* text;
    std::set<RuleId> extras;
    bool expect_proved;
  };
  const Formula pd_formula = parse_formula("(~(T -* ~T*) * ~(T -* ~T*)) -> ~(T -* ~T*)");
  const Formula td1 = parse_formula("(~T* -* F) -> T*");
  const Formula td2 = parse_formula("(T* & ((p * q) -* F)) -> ((p -* F) | (q -* F))");
  std::set<RuleId> pd{RuleId::P};
  std::set<RuleId> td{RuleId::P, RuleId::T};

  struct Run {
    const Formula* f;
    std::set<RuleId> extras;
    bool expect;
    const char* name;
  };
  const std::vector<Run> runs = {
      {&pd_formula, pd, true, "idempotence with P"},
      {&pd_formula, {}, false, "idempotence without P"},
      {&td1, td, true, "totality 1 with T"},
      {&td1, {}, false, "totality 1 without T"},
      {&td2, td, true, "totality 2 with T"},
      {&td2, {}, false, "totality 2 without T"},
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Run& r : runs) {
    SearchOptions opts;
    opts.extras = r.extras;
    Outcome out = prove(*r.f, opts);
    if (out.proved != r.expect) {
      ok = false;
      detail << r.name << " expected " << (r.expect ? "PROVED" : "UNPROVED") << "; ";
    }
    if (out.proved && !check(out.data->ground, CheckOptions{false, r.extras}).accepted) {
      ok = false;
      detail << r.name << " proof rejected; ";
    }
  }
  report(5, ok, "partial/total-determinism separations behave. " + detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_hard_nd_formula() {
  Formula f = parse_formula("~(T* & a & (b * ~(c -* (T* -> a))))");
  Outcome out = prove(f);
  bool ok = out.proved && out.stats.wall_ms < 1000.0;
  std::ostringstream d;
  if (out.proved) {
    auto counts = out.data->ground.rule_counts();
    bool shape = counts[RuleId::MEmpL] == 2 && counts[RuleId::StarL] == 1 &&
                 counts[RuleId::WandR] == 1;
    ok = ok && shape;
    d << "proved in " << out.stats.wall_ms << " ms; mempL x" << counts[RuleId::MEmpL]
      << ", starL x" << counts[RuleId::StarL] << ", wandR x" << counts[RuleId::WandR];
    g_proof_corpus.push_back(out.data->ground);
  } else {
    d << "unproved";
  }
  report(6, ok, d.str());
}

// ---------------------------------------------------------------- criterion 7
void criterion_soundness_sweep() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> proved = kSuite;
  proved.push_back("a -> T* * a");
  proved.push_back("T* * a -> a");
  proved.push_back("a * b -> b * a");
  proved.push_back("a * (b * c) -> (a * b) * c");
  proved.push_back("~(T* & a & (b * ~(c -* (T* -> a))))");

  bool ok = true;
  int swept = 0, skipped = 0;
  std::ostringstream detail;
  for (const std::string& text : proved) {
    Formula f = parse_formula(text);
    if (atoms_of(f).size() > 4) {
      skipped++;
      continue;
    }
    auto cm = countermodel(f, 3);
    swept++;
    if (cm) {
      ok = false;
      detail << "countermodel for " << text << " at world " << cm->world << "; ";
    }
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 120.0;
  std::ostringstream d;
  d << swept << " proved formulas countermodel-free up to size 3 (" << skipped
    << " skipped for atom count) in " << secs << " s. " << detail.str();
  report(7, ok, d.str());
}

// ---------------------------------------------------------------- criterion 8
struct AgreementCase {
  RelSet g;
  LabelledTree source;
  LabelledTree target;
  std::set<Label> vars;
};

AgreementCase make_agreement_case(std::mt19937& rng, bool solvable) {
  std::uniform_int_distribution<int> width_d(2, 5);
  int width = width_d(rng);
  std::vector<Label> leaf_labels;
  std::vector<LabelledTree> nodes;
  for (int i = 0; i < width; i++) {
    Label l = W("l" + std::to_string(i));
    leaf_labels.push_back(l);
    nodes.push_back(LabelledTree::leaf(l));
  }
  int counter = 0;
  while (nodes.size() > 1) {
    std::uniform_int_distribution<size_t> pick(0, nodes.size() - 1);
    size_t i = pick(rng);
    std::swap(nodes[i], nodes.back());
    LabelledTree a = nodes.back();
    nodes.pop_back();
    std::uniform_int_distribution<size_t> pick2(0, nodes.size() - 1);
    size_t j = pick2(rng);
    std::swap(nodes[j], nodes.back());
    LabelledTree b = nodes.back();
    nodes.pop_back();
    Label root = nodes.empty() ? W("r") : W("n" + std::to_string(counter++));
    nodes.push_back(LabelledTree::node(root, a, b));
  }
  LabelledTree source = nodes[0];

  std::vector<Label> tleaves = leaf_labels;
  std::shuffle(tleaves.begin(), tleaves.end(), rng);
  if (!solvable) tleaves[0] = W("alien");
  std::vector<LabelledTree> tnodes;
  for (const Label& l : tleaves) tnodes.push_back(LabelledTree::leaf(l));
  std::set<Label> vars;
  int vcount = 0;
  while (tnodes.size() > 1) {
    std::uniform_int_distribution<size_t> pick(0, tnodes.size() - 1);
    size_t i = pick(rng);
    std::swap(tnodes[i], tnodes.back());
    LabelledTree a = tnodes.back();
    tnodes.pop_back();
    std::uniform_int_distribution<size_t> pick2(0, tnodes.size() - 1);
    size_t j = pick2(rng);
    std::swap(tnodes[j], tnodes.back());
    LabelledTree b = tnodes.back();
    tnodes.pop_back();
    if (tnodes.empty()) {
      tnodes.push_back(LabelledTree::node(W("r"), a, b));
    } else {
      Label v = V("v" + std::to_string(vcount++));
      vars.insert(v);
      tnodes.push_back(LabelledTree::node(v, a, b));
    }
  }
  AgreementCase out{source.rel_atoms(), source, tnodes[0], vars};
  std::uniform_int_distribution<int> coin(0, 2);
  if (coin(rng) == 0 && out.g.size() < 6) out.g.insert(rel(W("nz1"), W("nz2"), W("nz3")));
  return out;
}

void criterion_heuristic_oracle_agreement() {
  std::mt19937 rng(271828);
  int n = 520, solved = 0, unsolved = 0, discrepancies = 0;
  std::ostringstream detail;
  for (int it = 0; it < n; it++) {
    AgreementCase tc = make_agreement_case(rng, it % 4 != 3);
    LabelGen gen("w");
    for (const RelAtom& a : tc.g) {
      gen.avoid(a.left);
      gen.avoid(a.right);
      gen.avoid(a.parent);
    }
    auto h = heuristic_solve(tc.g, tc.target, tc.vars, gen);
    auto b = brute_permute(tc.source, tc.target.root(), tc.target.leaf_labels());
    if (h.has_value() != b.has_value()) {
      discrepancies++;
      detail << "case " << it << " disagrees; ";
      continue;
    }
    if (!h) {
      unsolved++;
      continue;
    }
    solved++;
    for (const RelAtom& a : tc.target.rel_atoms()) {
      RelGoal goal = RelGoal::rel(a.left, a.right, a.parent).apply(h->assignment);
      if (!sigma_proves(tc.g, h->sigma, goal)) {
        discrepancies++;
        detail << "case " << it << " heuristic witness fails; ";
      }
    }
    auto [fin, th] = s_apply(tc.source.rel_atoms(), *b);
    if (!has_tree_subset(fin, tc.target.root(), tc.target.leaf_labels())) {
      discrepancies++;
      detail << "case " << it << " oracle witness fails; ";
    }
  }
  std::ostringstream d;
  d << n << " randomized instances, " << solved << " solvable / " << unsolved << " not, "
    << discrepancies << " discrepancies. " << detail.str();
  report(8, discrepancies == 0 && solved > 100 && unsolved > 50, d.str());
}

// ---------------------------------------------------------------- criterion 9
namespace mutation {

using Mutant = Derivation;

void replace_at_path(Derivation& root, const std::vector<int>& path, const Derivation& node) {
  Derivation* cur = &root;
  for (int i : path) cur = &cur->premises[i];
  *cur = node;
}

const Derivation& node_at(const Derivation& root, const std::vector<int>& path) {
  const Derivation* cur = &root;
  for (int i : path) cur = &cur->premises[i];
  return *cur;
}

void walk(const Derivation& d, std::vector<int>& path,
          const std::function<void(const Derivation&, const std::vector<int>&)>& fn) {
  fn(d, path);
  for (size_t i = 0; i < d.premises.size(); i++) {
    path.push_back(static_cast<int>(i));
    walk(d.premises[i], path, fn);
    path.pop_back();
  }
}

Derivation subst_subtree(const Derivation& d, const Subst& th) {
  Derivation out;
  out.rule = d.rule;
  out.conclusion = substitute(d.conclusion, th);
  out.args = d.args;
  if (out.args.principal)
    out.args.principal =
        LabelledFormula{th(out.args.principal->label), out.args.principal->formula};
  for (RelAtom& a : out.args.rels) a = th(a);
  for (Label& l : out.args.labels) l = th(l);
  if (out.args.cut_label) out.args.cut_label = th(*out.args.cut_label);
  if (out.args.cut_first) out.args.cut_first = substitute(*out.args.cut_first, th);
  for (const Derivation& p : d.premises) out.premises.push_back(subst_subtree(p, th));
  return out;
}

// Every single-occurrence label rename in every sequent slot.
void rename_mutants(const Derivation& proof, std::vector<Mutant>& out) {
  std::vector<int> path;
  walk(proof, path, [&](const Derivation& node, const std::vector<int>& at) {
    const Sequent& s = node.conclusion;
    Label to = W("mutant");
    size_t rel_index = 0;
    for (const RelAtom& a : s.rels) {
      for (int slot = 0; slot < 3; slot++) {
        const Label& old = slot == 0 ? a.left : slot == 1 ? a.right : a.parent;
        if (old == to) continue;
        Sequent s2 = s;
        s2.rels.remove_one(a);
        RelAtom a2 = a;
        (slot == 0 ? a2.left : slot == 1 ? a2.right : a2.parent) = to;
        s2.rels.add(a2);
        Mutant m = proof;
        Derivation n2 = node;
        n2.conclusion = s2;
        replace_at_path(m, at, n2);
        out.push_back(std::move(m));
      }
      rel_index++;
    }
    for (const LabelledFormula& f : s.lhs) {
      Sequent s2 = s;
      s2.lhs.remove_one(f);
      s2.lhs.add({to, f.formula});
      Mutant m = proof;
      Derivation n2 = node;
      n2.conclusion = s2;
      replace_at_path(m, at, n2);
      out.push_back(std::move(m));
    }
    for (const LabelledFormula& f : s.rhs) {
      Sequent s2 = s;
      s2.rhs.remove_one(f);
      s2.rhs.add({to, f.formula});
      Mutant m = proof;
      Derivation n2 = node;
      n2.conclusion = s2;
      replace_at_path(m, at, n2);
      out.push_back(std::move(m));
    }
  });
}

// Splice out every interior structural node.
void delete_mutants(const Derivation& proof, std::vector<Mutant>& out) {
  std::vector<int> path;
  walk(proof, path, [&](const Derivation& node, const std::vector<int>& at) {
    if (at.empty()) return;  // a proof of a different sequent is not a mutant
    if (!is_structural(node.rule) || node.premises.size() != 1) return;
    if (node.premises[0].conclusion == node.conclusion) return;  // no-op splice
    Mutant m = proof;
    replace_at_path(m, at, node.premises[0]);
    out.push_back(std::move(m));
  });
}

// Swap the premises of every two-premise node whose premises differ.
void swap_mutants(const Derivation& proof, std::vector<Mutant>& out) {
  std::vector<int> path;
  walk(proof, path, [&](const Derivation& node, const std::vector<int>& at) {
    if (node.premises.size() != 2) return;
    if (node.premises[0].conclusion == node.premises[1].conclusion) return;
    Mutant m = proof;
    Derivation n2 = node;
    std::swap(n2.premises[0], n2.premises[1]);
    replace_at_path(m, at, n2);
    out.push_back(std::move(m));
  });
}

// Replace every freshly introduced label by an existing one, consistently in
// the subtree above its introduction.
void capture_mutants(const Derivation& proof, std::vector<Mutant>& out) {
  std::vector<int> path;
  walk(proof, path, [&](const Derivation& node, const std::vector<int>& at) {
    std::vector<Label> fresh;
    switch (node.rule) {
      case RuleId::StarL:
      case RuleId::WandR:
        fresh = node.args.labels;
        break;
      case RuleId::A:
      case RuleId::Ac:
        fresh = node.args.labels;
        break;
      case RuleId::T:
        if (node.args.labels.size() == 3) fresh = {node.args.labels[2]};
        break;
      default:
        return;
    }
    std::set<Label> existing = labels_of(node.conclusion);
    for (const Label& f : fresh) {
      for (const Label& e : existing) {
        if (!e.is_world()) continue;
        Mutant m = proof;
        replace_at_path(m, at, subst_subtree(node_at(proof, at), Subst::single(f, e)));
        out.push_back(std::move(m));
        break;  // one capture per fresh label suffices
      }
    }
  });
}

}  // namespace mutation

void criterion_mutation_suite() {
  bool ok = g_proof_corpus.size() >= 10;
  std::ostringstream detail;
  if (!ok) detail << "corpus too small (" << g_proof_corpus.size() << "); ";

  long total = 0, killed = 0;
  for (const Derivation& proof : g_proof_corpus) {
    if (!check(proof).accepted) {
      ok = false;
      detail << "corpus proof not accepted; ";
      continue;
    }
    std::vector<Derivation> mutants;
    mutation::rename_mutants(proof, mutants);
    mutation::delete_mutants(proof, mutants);
    mutation::swap_mutants(proof, mutants);
    mutation::capture_mutants(proof, mutants);
    for (const Derivation& m : mutants) {
      total++;
      if (!check(m).accepted)
        killed++;
      else
        ok = false;
    }
  }
  std::ostringstream d;
  d << g_proof_corpus.size() << " proofs, " << total << " mutants, " << killed
    << " rejected (" << (total == killed ? "100%" : "NOT 100%") << " kill rate). "
    << detail.str();
  report(9, ok && total == killed && total > 0, d.str());
}

// --------------------------------------------------------------- criterion 10
void criterion_parser_round_trip() {
  std::mt19937 rng(16180);
  bool ok = true;
  for (int i = 0; i < 1000; i++) {
    Formula f = random_formula(rng, 8);
    if (!(parse_formula(to_string(f)) == f)) {
      ok = false;
      break;
    }
  }
  for (const std::string& text : kSuite) {
    Formula f = parse_formula(text);
    if (!(parse_formula(to_string(f)) == f)) ok = false;
  }
  report(10, ok, "parse/print identity on 1000 random formulas and the benchmark strings");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_benchmark_suite();
  criterion_unit_expansion_shape();
  criterion_hilbert_axioms();
  criterion_unit_asymmetry();
  criterion_semantic_variants();
  criterion_hard_nd_formula();
  criterion_soundness_sweep();
  criterion_heuristic_oracle_agreement();
  criterion_mutation_suite();
  criterion_parser_round_trip();
  std::printf("%s (%d failing)\n", failures == 0 ? "ALL CRITERIA PASS" : "FAILURES PRESENT",
              failures);
  return failures == 0 ? 0 : 1;
}
