#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bbi/sequent.hpp"

namespace bbi {

enum class RuleId {
  Id, Cut,
  BotL, TopR, MEmpL, MEmpR,
  AndL, AndR, ImpL, ImpR, NotL, NotR, OrL, OrR,
  StarL, StarR, WandL, WandR,
  E, A, U, Ac, Eq1, Eq2,
  P, T, IU, C,
};

const char* rule_name(RuleId r);
std::optional<RuleId> rule_from_name(const std::string& n);

bool is_zero_premise(RuleId r);    // id, botL, topR, mempR
bool is_structural(RuleId r);      // E, A, U, Ac, Eq1, Eq2, P, T, IU, C
bool is_extra_structural(RuleId r);  // P, T, IU, C

/// Rule-instance parameters: which occurrences are principal, which labels
/// are introduced or chosen, and the split for cut.
struct RuleArgs {
  std::optional<LabelledFormula> principal;
  std::vector<RelAtom> rels;   // principal relational atoms
  std::vector<Label> labels;   // introduced / chosen labels
  std::optional<Label> cut_label;
  std::optional<Formula> cut_formula;
  // For cut: the part of the conclusion routed to the first premise
  // (the cut formula itself is not listed here).
  std::optional<Sequent> cut_first;
  friend bool operator==(const RuleArgs&, const RuleArgs&) = default;
};

struct RuleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Premises mandated by the rule schema for this conclusion and parameters.
/// Throws RuleError when the parameters do not identify a valid instance
/// (missing principal occurrence, freshness or side-condition violation).
std::vector<Sequent> rule_premises(RuleId rule, const Sequent& conclusion, const RuleArgs& args);

struct Derivation {
  RuleId rule;
  Sequent conclusion;
  RuleArgs args;
  std::vector<Derivation> premises;

  int height() const {
    int h = 0;
    for (const Derivation& p : premises) h = std::max(h, p.height());
    return h + 1;
  }
  void count_rules(std::map<RuleId, int>& acc) const {
    acc[rule]++;
    for (const Derivation& p : premises) p.count_rules(acc);
  }
  std::map<RuleId, int> rule_counts() const {
    std::map<RuleId, int> acc;
    count_rules(acc);
    return acc;
  }
};

struct CheckOptions {
  bool allow_cut = false;
  std::set<RuleId> extras;  // enabled subset of {P, T, IU, C}
};

struct CheckReport {
  bool accepted = false;
  std::string message;        // first violation, when rejected
  std::vector<int> path;      // premise indices from the root to the violation
  int cut_count = 0;          // cut usage is reported even when allowed
  std::map<RuleId, int> rule_counts;
};

/// Trusted checker: accepts iff every node's premises equal the schema's
/// premises and every leaf is a zero-premise rule. Deterministic and total.
CheckReport check(const Derivation& d, const CheckOptions& opts = {});

}  // namespace bbi
