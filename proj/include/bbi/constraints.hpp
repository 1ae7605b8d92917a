#pragma once

#include <chrono>

#include "bbi/symbolic.hpp"

namespace bbi {

/// A deferred entailment obligation: lhs (possibly with free variables)
/// entails the rhs goal. `origin` names the rule instance that generated it.
struct Constraint {
  int id = -1;
  RelSet lhs;
  RelGoal rhs;
  std::string origin;
};

std::set<Label> free_vars(const Constraint& c);

/// A set of constraints with a strict partial order. The order is stored as
/// the full set of strict pairs; covering edges are derived.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  static ConstraintSystem from_pairs(std::vector<Constraint> cs,
                                     std::set<std::pair<int, int>> strict_pairs);

  const std::vector<Constraint>& constraints() const { return cs_; }
  bool empty() const { return cs_.empty(); }
  size_t size() const { return cs_.size(); }
  const Constraint& get(int id) const;
  bool contains(int id) const;

  bool prec(int i, int j) const { return order_.count({i, j}) > 0; }
  bool preceq(int i, int j) const { return i == j || prec(i, j); }
  bool covers(int i, int j) const;  // i is an immediate predecessor of j

  std::vector<int> minima() const;
  std::vector<int> successors(int i) const;  // all j strictly above i
  std::vector<int> covered_by(int i) const;  // the immediate successors of i

  void erase(int id);
  void rewrite(int id, RelSet lhs, RelGoal rhs);

  std::string dump_json() const;  // debugging aid

 private:
  std::vector<Constraint> cs_;
  std::set<std::pair<int, int>> order_;  // strict pairs, transitively closed
  friend ConstraintSystem collect(const SymDerivation&);
};

/// Constraints of a symbolic derivation: id and mempR contribute equality
/// goals, starR and wandL contribute relational goals, every other rule
/// passes the union of its premises through. The order is path containment
/// from the root.
ConstraintSystem collect(const SymDerivation& d);

struct WellFormedReport {
  bool ok = true;
  std::string violation;
};

/// Monotonicity, well-foundedness and unique variable origin.
WellFormedReport well_formed(const ConstraintSystem& sys);

/// Restriction by a solved minimum constraint: removes it, extends every
/// successor's lhs with the atoms the witness produced, and applies the
/// assignment throughout the successors.
ConstraintSystem restrict_system(const ConstraintSystem& sys, int cid, const Subst& theta,
                                 const SigmaSeq& sigma);

struct SolveStep {
  int constraint;
  Subst theta;
  SigmaSeq sigma;
};

struct Solution {
  Subst theta;                   // all assignments, merged
  std::vector<SolveStep> steps;  // the linearization actually used
};

struct SolveStats {
  long candidates_tried = 0;
  long queries = 0;
};

struct SolveBudget {
  RBudget r;
  size_t max_candidates = 48;
  long max_backtracks = 20000;
  std::chrono::steady_clock::time_point deadline{};
  bool has_deadline = false;
};

struct SolveTimeout : std::runtime_error {
  SolveTimeout() : std::runtime_error("constraint solving timed out") {}
};

/// Backtracking solver over a well-formed system: processes minima first,
/// guides assignments by the system's equality constraints, solves
/// tree-shaped chains with the permutation heuristic and everything else
/// with the bounded entailment search.
std::optional<Solution> solve(const ConstraintSystem& sys, const SolveBudget& budget, LabelGen& gen,
                              SolveStats* stats = nullptr);

/// Replays a solution step by step: each step's constraint must be minimal
/// and simple at its turn, its witness must prove the (grounded) goal, and
/// the system must be empty at the end.
bool replay_solution(const ConstraintSystem& sys, const Solution& sol, std::string* why = nullptr);

}  // namespace bbi
