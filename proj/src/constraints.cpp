#include "bbi/constraints.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <json.hpp>
#include <sstream>

namespace bbi {

std::set<Label> labels_of(const SymSequent& s) {
  std::set<Label> out;
  for (const RelAtom& a : s.rels) {
    out.insert(a.left);
    out.insert(a.right);
    out.insert(a.parent);
  }
  for (const LabelledFormula& f : s.lhs) out.insert(f.label);
  for (const LabelledFormula& f : s.rhs) out.insert(f.label);
  return out;
}

std::string to_string(const SymSequent& s) {
  std::ostringstream os;
  bool first = true;
  for (const RelAtom& a : s.rels) {
    if (!first) os << "; ";
    os << a.text();
    first = false;
  }
  os << (first ? "" : " ") << "||";
  first = true;
  for (const LabelledFormula& f : s.lhs) {
    os << (first ? " " : "; ") << f.label.text() << ":" << to_string(f.formula);
    first = false;
  }
  os << " |- ";
  first = true;
  for (const LabelledFormula& f : s.rhs) {
    if (!first) os << "; ";
    os << f.label.text() << ":" << to_string(f.formula);
    first = false;
  }
  return os.str();
}

std::set<Label> free_vars(const Constraint& c) {
  std::set<Label> out;
  auto add = [&](const Label& l) {
    if (l.is_var()) out.insert(l);
  };
  for (const RelAtom& a : c.lhs) {
    add(a.left);
    add(a.right);
    add(a.parent);
  }
  add(c.rhs.u);
  add(c.rhs.v);
  if (!c.rhs.is_eq) add(c.rhs.w);
  return out;
}

ConstraintSystem ConstraintSystem::from_pairs(std::vector<Constraint> cs,
                                              std::set<std::pair<int, int>> strict_pairs) {
  ConstraintSystem sys;
  sys.cs_ = std::move(cs);
  // transitive closure
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<std::pair<int, int>> add;
    for (const auto& [a, b] : strict_pairs)
      for (const auto& [c, d] : strict_pairs)
        if (b == c && !strict_pairs.count({a, d})) add.insert({a, d});
    if (!add.empty()) {
      strict_pairs.insert(add.begin(), add.end());
      changed = true;
    }
  }
  sys.order_ = std::move(strict_pairs);
  return sys;
}

const Constraint& ConstraintSystem::get(int id) const {
  for (const Constraint& c : cs_)
    if (c.id == id) return c;
  throw std::out_of_range("no constraint with id " + std::to_string(id));
}

bool ConstraintSystem::contains(int id) const {
  for (const Constraint& c : cs_)
    if (c.id == id) return true;
  return false;
}

bool ConstraintSystem::covers(int i, int j) const {
  if (!prec(i, j)) return false;
  for (const Constraint& k : cs_)
    if (prec(i, k.id) && prec(k.id, j)) return false;
  return true;
}

std::vector<int> ConstraintSystem::minima() const {
  std::vector<int> out;
  for (const Constraint& c : cs_) {
    bool minimal = true;
    for (const Constraint& d : cs_)
      if (prec(d.id, c.id)) {
        minimal = false;
        break;
      }
    if (minimal) out.push_back(c.id);
  }
  return out;
}

std::vector<int> ConstraintSystem::successors(int i) const {
  std::vector<int> out;
  for (const Constraint& c : cs_)
    if (prec(i, c.id)) out.push_back(c.id);
  return out;
}

std::vector<int> ConstraintSystem::covered_by(int i) const {
  std::vector<int> out;
  for (const Constraint& c : cs_)
    if (covers(i, c.id)) out.push_back(c.id);
  return out;
}

void ConstraintSystem::erase(int id) {
  cs_.erase(std::remove_if(cs_.begin(), cs_.end(), [&](const Constraint& c) { return c.id == id; }),
            cs_.end());
  for (auto it = order_.begin(); it != order_.end();)
    it = (it->first == id || it->second == id) ? order_.erase(it) : std::next(it);
}

void ConstraintSystem::rewrite(int id, RelSet lhs, RelGoal rhs) {
  for (Constraint& c : cs_)
    if (c.id == id) {
      c.lhs = std::move(lhs);
      c.rhs = std::move(rhs);
      return;
    }
  throw std::out_of_range("rewrite: no constraint with id " + std::to_string(id));
}

std::string ConstraintSystem::dump_json() const {
  nlohmann::json out;
  nlohmann::json cs = nlohmann::json::array();
  for (const Constraint& c : cs_) {
    nlohmann::json lhs = nlohmann::json::array();
    for (const RelAtom& a : c.lhs)
      lhs.push_back({a.left.text(), a.right.text(), a.parent.text()});
    cs.push_back({{"id", c.id}, {"lhs", lhs}, {"rhs", c.rhs.text()}, {"origin", c.origin}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Constraint& a : cs_)
    for (const Constraint& b : cs_)
      if (covers(a.id, b.id)) edges.push_back({a.id, b.id});
  out["constraints"] = cs;
  out["covering"] = edges;
  return out.dump(2);
}

// -------------------------------------------------------------------------
// Collection from a symbolic derivation

ConstraintSystem collect(const SymDerivation& d) {
  std::vector<Constraint> cs;
  std::vector<std::vector<int>> paths;

  std::function<void(const SymDerivation&, std::vector<int>&)> walk =
      [&](const SymDerivation& n, std::vector<int>& path) {
        auto add = [&](RelGoal goal) {
          std::ostringstream origin;
          for (int i : path) origin << i << ".";
          origin << rule_name(n.rule);
          cs.push_back({static_cast<int>(cs.size()), n.sequent.rels, std::move(goal), origin.str()});
          paths.push_back(path);
        };
        switch (n.rule) {
          case RuleId::Id:
            if (n.labels.size() != 2) throw std::invalid_argument("symbolic id needs two labels");
            add(RelGoal::eq(n.labels[0], n.labels[1]));
            break;
          case RuleId::MEmpR:
            if (n.labels.size() != 1) throw std::invalid_argument("symbolic mempR needs a label");
            add(RelGoal::eq(n.labels[0], Label::eps()));
            break;
          case RuleId::StarR: {
            if (n.labels.size() != 2 || !n.principal)
              throw std::invalid_argument("symbolic starR needs two variables and a principal");
            add(RelGoal::rel(n.labels[0], n.labels[1], n.principal->label));
            break;
          }
          case RuleId::WandL: {
            if (n.labels.size() != 2 || !n.principal)
              throw std::invalid_argument("symbolic wandL needs two variables and a principal");
            add(RelGoal::rel(n.labels[0], n.principal->label, n.labels[1]));
            break;
          }
          default:
            break;
        }
        for (size_t i = 0; i < n.premises.size(); i++) {
          path.push_back(static_cast<int>(i));
          walk(n.premises[i], path);
          path.pop_back();
        }
      };
  std::vector<int> path;
  walk(d, path);

  auto is_prefix = [](const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() > b.size()) return false;
    return std::equal(a.begin(), a.end(), b.begin());
  };
  std::set<std::pair<int, int>> pairs;
  for (size_t i = 0; i < cs.size(); i++)
    for (size_t j = 0; j < cs.size(); j++)
      if (i != j && is_prefix(paths[i], paths[j])) pairs.insert({cs[i].id, cs[j].id});
  return ConstraintSystem::from_pairs(std::move(cs), std::move(pairs));
}

// -------------------------------------------------------------------------
// Well-formedness

WellFormedReport well_formed(const ConstraintSystem& sys) {
  const auto& cs = sys.constraints();
  for (const Constraint& a : cs) {
    if (sys.prec(a.id, a.id)) return {false, "order is not irreflexive"};
    for (const Constraint& b : cs) {
      if (sys.prec(a.id, b.id) && sys.prec(b.id, a.id))
        return {false, "order has a cycle between " + std::to_string(a.id) + " and " +
                           std::to_string(b.id)};
      if (sys.prec(a.id, b.id)) {
        for (const RelAtom& at : a.lhs)
          if (!b.lhs.count(at))
            return {false, "monotonicity violated: lhs of " + std::to_string(a.id) +
                               " is not contained in lhs of " + std::to_string(b.id)};
      }
    }
  }
  // unique variable origin
  std::set<Label> vars;
  for (const Constraint& c : cs)
    for (const Label& v : free_vars(c)) vars.insert(v);
  for (const Label& x : vars) {
    std::vector<int> holding;
    for (const Constraint& c : cs)
      if (free_vars(c).count(x)) holding.push_back(c.id);
    int origin = -1;
    for (int cand : holding) {
      bool least = true;
      for (int other : holding)
        if (!sys.preceq(cand, other)) {
          least = false;
          break;
        }
      if (least) {
        origin = cand;
        break;
      }
    }
    if (origin < 0)
      return {false, "variable " + x.text() + " has no unique minimum origin"};
    const Constraint& oc = sys.get(origin);
    if (oc.rhs.is_eq)
      return {false, "variable " + x.text() + " originates in an equality constraint"};
    bool in_lhs = false;
    for (const RelAtom& a : oc.lhs)
      if (a.left == x || a.right == x || a.parent == x) in_lhs = true;
    if (in_lhs)
      return {false, "variable " + x.text() + " occurs on the left of its origin constraint"};
  }
  return {true, ""};
}

// -------------------------------------------------------------------------
// Restriction

ConstraintSystem restrict_system(const ConstraintSystem& sys, int cid, const Subst& theta,
                                 const SigmaSeq& sigma) {
  const Constraint& c = sys.get(cid);
  auto [produced, comp] = s_apply(c.lhs, sigma);
  ConstraintSystem out = sys;
  for (int j : sys.successors(cid)) {
    const Constraint& old = sys.get(j);
    RelSet lhs2;
    for (const RelAtom& a : old.lhs) lhs2.insert(theta(a));
    lhs2.insert(produced.begin(), produced.end());
    out.rewrite(j, std::move(lhs2), old.rhs.apply(theta));
  }
  out.erase(cid);
  return out;
}

// -------------------------------------------------------------------------
// Solver

namespace {

struct Solver {
  const SolveBudget& budget;
  LabelGen& gen;
  SolveStats* stats;
  std::map<Label, Label> hints;  // unification guesses from equality constraints
  long backtracks = 0;

  void tick() {
    if (budget.has_deadline && std::chrono::steady_clock::now() > budget.deadline)
      throw SolveTimeout();
    if (++backtracks > budget.max_backtracks) throw SolveTimeout();
  }

  // The cluster of relational constraints reachable from cid through covering
  // edges while the left-hand side stays the same; their goals together may
  // describe one labelled binary tree.
  std::vector<int> tree_cluster(const ConstraintSystem& sys, int cid) const {
    const RelSet& base = sys.get(cid).lhs;
    std::vector<int> cluster{cid};
    std::vector<int> frontier{cid};
    while (!frontier.empty()) {
      int cur = frontier.back();
      frontier.pop_back();
      for (int j : sys.covered_by(cur)) {
        const Constraint& cj = sys.get(j);
        if (cj.rhs.is_eq || cj.lhs != base) continue;
        if (std::find(cluster.begin(), cluster.end(), j) != cluster.end()) continue;
        cluster.push_back(j);
        frontier.push_back(j);
      }
    }
    return cluster;
  }

  std::optional<std::pair<Subst, SigmaSeq>> try_tree_heuristic(const ConstraintSystem& sys,
                                                               int cid) const {
    const Constraint& c = sys.get(cid);
    if (c.rhs.is_eq) return std::nullopt;
    std::vector<int> chain = tree_cluster(sys, cid);

    Subst hint_subst;
    for (const auto& [k, v] : hints)
      if (!v.is_var()) hint_subst.bind(k, v);

    RelSet goal_atoms;
    std::set<Label> assignable;
    for (int id : chain) {
      const Constraint& ci = sys.get(id);
      RelGoal g = ci.rhs.apply(hint_subst);
      goal_atoms.insert({g.u, g.v, g.w});
      for (const Label& v : free_vars(ci)) assignable.insert(v);
    }
    auto trees = trees_of(goal_atoms);
    if (!trees || trees->size() != 1) return std::nullopt;
    const LabelledTree& target = (*trees)[0];

    LabelGen local = gen;  // speculative: only committed on success
    auto res = heuristic_solve(c.lhs, target, assignable, local);
    if (!res) return std::nullopt;

    // the committed assignment: internal nodes from the heuristic, plus the
    // hint guesses that grounded the leaves
    Subst asg = res->assignment;
    std::set<Label> tree_vars;
    for (const RelAtom& a : goal_atoms)
      for (const Label* l : {&a.left, &a.right, &a.parent})
        if (l->is_var()) tree_vars.insert(*l);
    for (const Label& v : assignable) {
      if (tree_vars.count(v)) continue;  // internal vars already in asg
      auto it = hints.find(v);
      if (it != hints.end() && !it->second.is_var()) asg.bind(v, it->second);
    }
    gen = local;
    return std::make_pair(asg, res->sigma);
  }

  bool try_candidate(const ConstraintSystem& sys, int cid, const Subst& asg, const SigmaSeq& sigma,
                     Subst& theta, std::vector<SolveStep>& steps) {
    if (stats) stats->candidates_tried++;
    tick();
    ConstraintSystem next = restrict_system(sys, cid, asg, sigma);
    steps.push_back({cid, asg, sigma});
    Subst saved = theta;
    for (const auto& [k, v] : asg.mapping()) theta.bind(k, v);
    if (dfs(next, theta, steps)) return true;
    theta = saved;
    steps.pop_back();
    return false;
  }

  bool dfs(const ConstraintSystem& sys, Subst& theta, std::vector<SolveStep>& steps) {
    if (sys.empty()) return true;
    tick();

    std::vector<int> mins = sys.minima();
    if (mins.empty()) return false;
    int cid = *std::min_element(mins.begin(), mins.end());
    const Constraint c = sys.get(cid);
    for (const RelAtom& a : c.lhs)
      if (a.left.is_var() || a.right.is_var() || a.parent.is_var())
        throw std::logic_error("minimum constraint is not simple: " + c.origin);

    if (c.rhs.ground()) {
      // a forced check: one witness or nothing
      if (stats) stats->queries++;
      RBudget rb = budget.r;
      rb.max_steps = std::max(1000, rb.max_steps / 4);
      auto rcs = r_candidates(c.lhs, c.rhs, rb, 1, &gen, &hints);
      if (rcs.empty()) return false;
      return try_candidate(sys, cid, rcs[0].assignment, rcs[0].sigma, theta, steps);
    }

    // the tree heuristic first, then staged generic searches: a shallow pass
    // catches the guided assignments cheaply, the full pass runs only when
    // everything shallow has failed
    if (auto h = try_tree_heuristic(sys, cid))
      if (try_candidate(sys, cid, h->first, h->second, theta, steps)) return true;

    // successor goals guide the engine: candidates that leave an immediate
    // follow-up goal underivable are deprioritized. Guesses for this
    // constraint's own variables stay out: the candidate itself decides them.
    std::set<Label> own;
    for (const Label& v : c.rhs.vars()) own.insert(v);
    Subst hint_subst;
    for (const auto& [k, v] : hints)
      if (!v.is_var() && !own.count(k)) hint_subst.bind(k, v);
    std::vector<SuccessorGoal> succ_goals;
    for (int j : sys.covered_by(cid)) {
      const Constraint& cj = sys.get(j);
      SuccessorGoal sg{cj.rhs.apply(hint_subst), {}};
      for (const RelAtom& a : cj.lhs)
        if (!c.lhs.count(a)) sg.extra.insert(hint_subst(a));
      succ_goals.push_back(std::move(sg));
    }

    std::set<std::string> tried;
    for (int stage = 0; stage < 2; stage++) {
      RBudget rb = budget.r;
      if (stage == 0) rb.max_steps = std::min(rb.max_steps, 1500);
      if (stats) stats->queries++;
      bool exhausted = false;
      auto rcs = r_candidates(c.lhs, c.rhs, rb, budget.max_candidates, &gen, &hints, &exhausted,
                              &succ_goals);
      for (auto& rc : rcs) {
        std::ostringstream shape;
        for (const auto& [k, v] : rc.assignment.mapping())
          shape << k.text() << ">" << v.text() << ";";
        shape << "#" << rc.sigma.size();
        if (!tried.insert(shape.str()).second) continue;
        if (try_candidate(sys, cid, rc.assignment, rc.sigma, theta, steps)) return true;
      }
      if (rb.max_steps >= budget.r.max_steps || exhausted) break;
    }
    return false;
  }
};

}  // namespace

std::optional<Solution> solve(const ConstraintSystem& sys, const SolveBudget& budget, LabelGen& gen,
                              SolveStats* stats) {
  auto wf = well_formed(sys);
  if (!wf.ok) throw std::invalid_argument("solve: system not well-formed: " + wf.violation);

  Solver sv{budget, gen, stats, {}, 0};

  // unification pre-pass over equality constraints: guesses only, used to
  // order candidates; never committed without a witness
  for (const Constraint& c : sys.constraints()) {
    if (!c.rhs.is_eq) continue;
    const Label& u = c.rhs.u;
    const Label& v = c.rhs.v;
    auto resolve = [&](Label l) {
      std::set<Label> seen;
      while (l.is_var() && sv.hints.count(l) && seen.insert(l).second) l = sv.hints[l];
      return l;
    };
    Label ru = resolve(u), rv = resolve(v);
    if (ru.is_var() && !rv.is_var())
      sv.hints[ru] = rv;
    else if (rv.is_var() && !ru.is_var())
      sv.hints[rv] = ru;
    else if (ru.is_var() && rv.is_var() && !(ru == rv))
      sv.hints[ru] = rv;
  }
  // resolve hint chains to ground ends where possible
  auto settle = [&] {
    for (auto& [k, v] : sv.hints) {
      Label cur = v;
      std::set<Label> seen{k};
      while (cur.is_var() && sv.hints.count(cur) && seen.insert(cur).second) cur = sv.hints[cur];
      v = cur;
    }
  };
  settle();

  // relational propagation: when a fully guessed relational goal unifies
  // with exactly one left-hand-side atom, adopt the bindings this forces on
  // the atom's own variables (still only guesses)
  for (bool changed = true; changed;) {
    changed = false;
    for (const Constraint& c : sys.constraints()) {
      if (c.rhs.is_eq) continue;
      Subst hs;
      for (const auto& [k, v] : sv.hints)
        if (!v.is_var()) hs.bind(k, v);
      RelGoal g = c.rhs.apply(hs);
      if (!g.ground()) continue;
      std::optional<std::map<Label, Label>> unique_bind;
      int matches = 0;
      for (const RelAtom& t : c.lhs) {
        std::map<Label, Label> bind;
        bool ok = true;
        auto comp = [&](const Label& gc, const Label& ac) {
          if (!ok) return;
          Label y = ac;
          if (y.is_var() && sv.hints.count(y) && !sv.hints.at(y).is_var()) y = sv.hints.at(y);
          if (y.is_var()) {
            auto it = bind.find(y);
            if (it == bind.end())
              bind.emplace(y, gc);
            else if (!(it->second == gc))
              ok = false;
          } else if (!(gc == y)) {
            ok = false;
          }
        };
        comp(g.u, t.left);
        comp(g.v, t.right);
        comp(g.w, t.parent);
        if (!ok) continue;
        matches++;
        if (matches == 1)
          unique_bind = bind;
        else
          unique_bind.reset();
      }
      if (matches == 1 && unique_bind) {
        for (const auto& [var, val] : *unique_bind) {
          if (!sv.hints.count(var) && !val.is_var()) {
            sv.hints[var] = val;
            changed = true;
          }
        }
      }
    }
    if (changed) settle();
  }

  Subst theta;
  std::vector<SolveStep> steps;
  try {
    if (!sv.dfs(sys, theta, steps)) return std::nullopt;
  } catch (const SolveTimeout&) {
    // a true deadline aborts the whole search; a local budget just fails this system
    if (budget.has_deadline && std::chrono::steady_clock::now() > budget.deadline) throw;
    return std::nullopt;
  }
  return Solution{theta, steps};
}

bool replay_solution(const ConstraintSystem& sys, const Solution& sol, std::string* why) {
  ConstraintSystem cur = sys;
  auto explain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (const SolveStep& st : sol.steps) {
    if (!cur.contains(st.constraint))
      return explain("step refers to a missing constraint " + std::to_string(st.constraint));
    std::vector<int> mins = cur.minima();
    if (std::find(mins.begin(), mins.end(), st.constraint) == mins.end())
      return explain("constraint " + std::to_string(st.constraint) + " is not minimal at its turn");
    const Constraint& c = cur.get(st.constraint);
    for (const RelAtom& a : c.lhs)
      if (a.left.is_var() || a.right.is_var() || a.parent.is_var())
        return explain("constraint " + std::to_string(st.constraint) + " is not simple at its turn");
    RelGoal grounded = c.rhs.apply(st.theta);
    if (!grounded.ground())
      return explain("assignment does not ground constraint " + std::to_string(st.constraint));
    if (!sigma_proves(c.lhs, st.sigma, grounded))
      return explain("witness fails for constraint " + std::to_string(st.constraint));
    cur = restrict_system(cur, st.constraint, st.theta, st.sigma);
  }
  if (!cur.empty()) return explain("constraints remain after the last step");
  if (why) *why = "ok";
  return true;
}

}  // namespace bbi
