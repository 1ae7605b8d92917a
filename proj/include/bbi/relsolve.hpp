#pragma once

#include <memory>
#include <optional>

#include "bbi/kernel.hpp"

namespace bbi {

using RelSet = std::set<RelAtom>;

/// One structural-rule application inside a sequence: the rule, its principal
/// atoms, the substitution it performs (identity except for Eq1/Eq2 and the
/// substituting auxiliary rules), the atoms it produces, and any label it
/// introduces.
struct StructStep {
  RuleId rule;
  std::vector<RelAtom> principal;
  Subst theta;
  std::vector<RelAtom> produced;
  std::vector<Label> introduced;
  friend bool operator==(const StructStep&, const StructStep&) = default;
};

using SigmaSeq = std::vector<StructStep>;

StructStep step_e(const RelAtom& t);
StructStep step_a(const RelAtom& t1, const RelAtom& t2, const Label& fresh);
StructStep step_ac(const RelAtom& t, const Label& fresh);
StructStep step_u(const Label& x);
StructStep step_eq1(const RelAtom& t);  // t = (eps, w |> w'), substitutes [w'/w]
StructStep step_eq2(const RelAtom& t);  // t = (eps, w' |> w), substitutes [w'/w]
StructStep step_p(const RelAtom& keep, const RelAtom& drop);
StructStep step_t(const Label& a, const Label& b, const Label& fresh);
StructStep step_iu(const RelAtom& t);
StructStep step_c(const RelAtom& keep, const RelAtom& drop);

struct UndefinedStep : std::runtime_error {
  size_t index;
  UndefinedStep(size_t i, const std::string& why)
      : std::runtime_error("step " + std::to_string(i) + " undefined: " + why), index(i) {}
};

/// Apply a sequence left to right. Returns the final atom set and the
/// composite substitution. Throws UndefinedStep when a step's principal
/// atoms are not all present.
std::pair<RelSet, Subst> s_apply(const RelSet& g, const SigmaSeq& sigma);

/// Equality closure of a set of relational atoms: the finest partition closed
/// under merging a with b for every atom whose current form is (eps,a |> b),
/// iterated to a fixpoint. Carries a replayable witness of Eq1/Eq2 steps.
class EqClasses {
 public:
  explicit EqClasses(const RelSet& g);

  Label rep(const Label& l) const;
  bool equal(const Label& a, const Label& b) const { return rep(a) == rep(b); }
  std::vector<std::vector<Label>> classes() const;
  const SigmaSeq& witness() const { return witness_; }
  const Subst& composite() const { return composite_; }

 private:
  std::set<Label> labels_hint_;
  SigmaSeq witness_;
  Subst composite_;
};

/// A goal for the relational entailment: either an equality between two
/// labels or the derivability of a relational atom. Components may be free
/// variables when used through the candidate interface.
struct RelGoal {
  bool is_eq;
  Label u, v, w;
  static RelGoal eq(Label a, Label b) { return {true, std::move(a), std::move(b), Label::eps()}; }
  static RelGoal rel(Label a, Label b, Label c) {
    return {false, std::move(a), std::move(b), std::move(c)};
  }
  bool ground() const { return !u.is_var() && !v.is_var() && (is_eq || !w.is_var()); }
  RelGoal apply(const Subst& th) const {
    return {is_eq, th(u), th(v), is_eq ? w : th(w)};
  }
  std::vector<Label> vars() const;
  std::string text() const;
  friend auto operator<=>(const RelGoal&, const RelGoal&) = default;
};

struct RBudget {
  int max_a = 4;        // iterative-deepening cap on A/Ac applications
  int max_steps = 20000;  // explored-state cap per query
  int max_u = 3;
  int max_t = 2;
  int max_p = 2;
  int max_iu = 2;
  int max_c = 2;
  std::set<RuleId> extras;  // enabled subset of {P, T, IU, C}
};

/// Check that sigma, replayed from g, proves the goal: the goal is pushed
/// through subst(sigma) and then checked against the final set with the
/// equality closure.
bool sigma_proves(const RelSet& g, const SigmaSeq& sigma, const RelGoal& goal);

/// Ground-goal entailment search. NotFound (nullopt) only means no witness
/// was found within the budget.
std::optional<SigmaSeq> r_entails(const RelSet& g, const RelGoal& goal, const RBudget& budget = {},
                                  LabelGen* gen = nullptr);

/// Candidate solutions for a goal that may contain free variables: each
/// candidate assigns the goal's variables and provides a witnessing sequence.
struct RCandidate {
  Subst assignment;
  SigmaSeq sigma;
  RelAtom matched;  // the atom the goal was matched against (rel goals)
};
/// A follow-up obligation used to rank candidates: the goal plus whatever
/// atoms its own left-hand side adds beyond the current constraint's.
struct SuccessorGoal {
  RelGoal goal;
  RelSet extra;
};

std::vector<RCandidate> r_candidates(const RelSet& g, const RelGoal& goal, const RBudget& budget,
                                     size_t max_candidates, LabelGen* gen = nullptr,
                                     const std::map<Label, Label>* hints = nullptr,
                                     bool* exhausted = nullptr,
                                     const std::vector<SuccessorGoal>* successor_goals = nullptr);

// -------------------------------------------------------------------------
// Labelled binary trees

class LabelledTree {
 public:
  static LabelledTree leaf(Label l);
  static LabelledTree node(Label root, LabelledTree left, LabelledTree right);

  const Label& root() const { return n_->root; }
  bool is_leaf() const { return !n_->left; }
  LabelledTree left() const;
  LabelledTree right() const;

  int width() const;  // number of leaves
  std::multiset<Label> leaf_labels() const;
  /// The relational atoms encoded by this tree; rejects width-1 trees.
  RelSet rel_atoms() const;

 private:
  struct Node {
    Label root;
    std::shared_ptr<const Node> left, right;
  };
  explicit LabelledTree(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

/// Partition a set of atoms into labelled binary trees, if possible: every
/// atom used exactly once, no label expanded twice, no cycles.
std::optional<std::vector<LabelledTree>> trees_of(const RelSet& r);

struct HeuristicResult {
  Subst assignment;  // internal free variables -> labels
  SigmaSeq sigma;    // E/A steps permuting a matching subset of g
};

/// Solve a tree-shaped chain of relational goals in one shot: target's
/// internal nodes must be free variables from `assignable` occurring once;
/// root and leaves must be ground, non-eps labels. Succeeds when g contains a
/// tree-forming subset with the same root and leaf multiset.
std::optional<HeuristicResult> heuristic_solve(const RelSet& g, const LabelledTree& target,
                                               const std::set<Label>& assignable, LabelGen& gen);

/// Breadth-first oracle over E/A applications on Rel(source) until some
/// subset of the current atoms forms a tree with the given root and leaf
/// multiset. Budget counts explored states.
std::optional<SigmaSeq> brute_permute(const LabelledTree& source, const Label& root,
                                      const std::multiset<Label>& leaves, int budget = 50000);

/// True when some subset of `atoms` forms a tree with this root and exactly
/// these leaves (used by the permutation goal test; exposed for tests).
bool has_tree_subset(const RelSet& atoms, const Label& root, const std::multiset<Label>& leaves);

}  // namespace bbi
