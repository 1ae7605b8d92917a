#pragma once

#include "bbi/constraints.hpp"

namespace bbi {

struct SearchOptions {
  int multiplicity = 3;     // max expansions per starR/wandL occurrence per branch
  RBudget r_budget{};       // budget for the structural entailment searches
  std::set<RuleId> extras;  // enabled subset of {P, T, IU, C}
  int timeout_ms = 10000;
  size_t max_candidates = 48;
  long max_solver_backtracks = 20000;
};

struct SearchStats {
  long branches = 0;          // stable leaves reached across the whole search
  long closures = 0;          // closure/expansion options tried
  long solves = 0;            // candidate closed trees handed to the solver
  long solve_candidates = 0;  // assignment candidates tried inside the solver
  double wall_ms = 0;
  bool timed_out = false;
  int multiplicity_used = 0;  // the deepening level that succeeded
};

struct ProvedData {
  SymDerivation symbolic;
  ConstraintSystem constraints;
  Solution solution;
  Derivation ground;
};

struct Outcome {
  bool proved = false;
  std::optional<ProvedData> data;  // present iff proved
  SearchStats stats;
};

/// Backward proof search from |- a0 : f with a0 fresh. A Proved outcome
/// always carries a reconstructed ground derivation accepted by the kernel
/// without cut and without disabled auxiliary rules.
Outcome prove(const Formula& f, const SearchOptions& opts = {});

/// The initial symbolic sequent |- a0 : f.
SymSequent initial_sequent(const Formula& f);

/// Exhaustive application of the invertible rules. Returns the stable
/// sequents (those where only closures or positive rules apply); the
/// branching structure is discarded. Fresh labels are drawn from `gen`.
/// When given, `max_branch_steps` receives the length of the longest
/// saturation branch, which is bounded by the end sequent's size.
std::vector<SymSequent> saturate(const SymSequent& s, LabelGen& gen,
                                 int* max_branch_steps = nullptr);

struct ReconstructError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground a closed symbolic derivation with a solution of its constraint
/// system: instantiates free variables, splices each witness as explicit
/// structural nodes below the rule that generated its constraint, inserts
/// the label merges needed to make closures literal, and returns a
/// kernel-checkable derivation.
Derivation reconstruct(const SymDerivation& d, const ConstraintSystem& sys, const Solution& sol);

}  // namespace bbi
