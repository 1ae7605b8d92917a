#pragma once

#include <random>
#include <vector>

#include "bbi/kernel.hpp"
#include "bbi/relsolve.hpp"

namespace bbi::testing {

inline Label W(const std::string& n) { return Label::world(n); }
inline Label V(const std::string& n) { return Label::var(n); }
inline Label EPS() { return Label::eps(); }
inline RelAtom rel(const Label& l, const Label& r, const Label& p) { return {l, r, p}; }

/// Random formula over the given atoms, at most `depth` connectives deep.
inline Formula random_formula(std::mt19937& rng, int depth,
                              const std::vector<std::string>& atoms = {"p", "q", "r"}) {
  std::uniform_int_distribution<int> leaf(0, 3);
  std::uniform_int_distribution<int> conn(0, 5);
  std::uniform_int_distribution<size_t> pick(0, atoms.size() - 1);
  if (depth == 0 || leaf(rng) == 0) {
    switch (leaf(rng)) {
      case 0: return Formula::top();
      case 1: return Formula::bot();
      case 2: return Formula::memp();
      default: return Formula::atom(atoms[pick(rng)]);
    }
  }
  switch (conn(rng)) {
    case 0: return Formula::neg(random_formula(rng, depth - 1, atoms));
    case 1:
      return Formula::conj(random_formula(rng, depth - 1, atoms),
                           random_formula(rng, depth - 1, atoms));
    case 2:
      return Formula::disj(random_formula(rng, depth - 1, atoms),
                           random_formula(rng, depth - 1, atoms));
    case 3:
      return Formula::impl(random_formula(rng, depth - 1, atoms),
                           random_formula(rng, depth - 1, atoms));
    case 4:
      return Formula::star(random_formula(rng, depth - 1, atoms),
                           random_formula(rng, depth - 1, atoms));
    default:
      return Formula::wand(random_formula(rng, depth - 1, atoms),
                           random_formula(rng, depth - 1, atoms));
  }
}

/// Random labelled binary tree with the given leaf labels (shape random).
inline LabelledTree random_tree(std::mt19937& rng, std::vector<LabelledTree> nodes) {
  while (nodes.size() > 1) {
    std::uniform_int_distribution<size_t> pick(0, nodes.size() - 1);
    size_t i = pick(rng);
    std::swap(nodes[i], nodes.back());
    LabelledTree a = nodes.back();
    nodes.pop_back();
    std::uniform_int_distribution<size_t> pick2(0, nodes.size() - 1);
    size_t j = pick2(rng);
    // the combined node needs a root label chosen by the caller; use a
    // placeholder world the caller rewrites, or build with provided roots
    std::swap(nodes[j], nodes.back());
    LabelledTree b = nodes.back();
    nodes.pop_back();
    nodes.push_back(LabelledTree::node(Label::world("tmp"), a, b));
  }
  return nodes[0];
}

/// The Fig.-2-shaped hand derivation of |- a : A -> (T* * A).
inline Derivation unit_expansion_proof(const std::string& world, const Formula& atom_formula) {
  Label a = W(world);
  Formula goal = Formula::impl(atom_formula, Formula::star(Formula::memp(), atom_formula));

  Sequent s0;  // |- a : A -> T* * A
  s0.rhs.add({a, goal});
  Sequent s1;  // a:A |- a : T* * A
  s1.lhs.add({a, atom_formula});
  s1.rhs.add({a, Formula::star(Formula::memp(), atom_formula)});
  Sequent s2 = s1;  // + (a, eps |> a)
  s2.rels.add({a, EPS(), a});
  Sequent s3 = s2;  // + (eps, a |> a)
  s3.rels.add({EPS(), a, a});
  Sequent s4 = s3;  // |- ... ; eps : T*
  s4.rhs.add({EPS(), Formula::memp()});
  Sequent s5 = s3;  // |- ... ; a : A
  s5.rhs.add({a, atom_formula});

  Derivation memp{RuleId::MEmpR, s4, {}, {}};
  memp.args.principal = LabelledFormula{EPS(), Formula::memp()};
  Derivation id{RuleId::Id, s5, {}, {}};
  id.args.principal = LabelledFormula{a, atom_formula};
  Derivation star{RuleId::StarR, s3, {}, {}};
  star.args.principal = LabelledFormula{a, Formula::star(Formula::memp(), atom_formula)};
  star.args.rels = {rel(EPS(), a, a)};
  star.premises = {memp, id};
  Derivation e{RuleId::E, s2, {}, {}};
  e.args.rels = {rel(a, EPS(), a)};
  e.premises = {star};
  Derivation u{RuleId::U, s1, {}, {}};
  u.args.labels = {a};
  u.premises = {e};
  Derivation imp{RuleId::ImpR, s0, {}, {}};
  imp.args.principal = LabelledFormula{a, goal};
  imp.premises = {u};
  return imp;
}

}  // namespace bbi::testing
