#pragma once

#include "bbi/kernel.hpp"
#include "bbi/relsolve.hpp"

namespace bbi {

/// A sequent whose labels may include free variables. The relational atoms
/// are kept apart from the labelled formulae; positive rules never extend
/// them, so they are exactly the atoms created by starL, wandR and mempL.
struct SymSequent {
  RelSet rels;
  Multiset<LabelledFormula> lhs;
  Multiset<LabelledFormula> rhs;
  friend bool operator==(const SymSequent&, const SymSequent&) = default;
};

std::set<Label> labels_of(const SymSequent& s);
std::string to_string(const SymSequent& s);

/// A node of a symbolic (free-variable) derivation.
///   id:    labels = [w1, w2]       (left and right occurrence of the atom)
///   mempR: labels = [w]
///   starL/wandR: labels = the two fresh world labels
///   starR/wandL: labels = the two new free variables
struct SymDerivation {
  RuleId rule;
  SymSequent sequent;
  std::optional<LabelledFormula> principal;
  std::vector<Label> labels;
  std::vector<RelAtom> rels;  // principal atoms of saturation-phase extras
  std::vector<SymDerivation> premises;

  void count_rules(std::map<RuleId, int>& acc) const {
    acc[rule]++;
    for (const SymDerivation& p : premises) p.count_rules(acc);
  }
};

}  // namespace bbi
