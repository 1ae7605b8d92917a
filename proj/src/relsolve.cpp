#include "bbi/relsolve.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <sstream>

namespace bbi {

std::vector<Label> RelGoal::vars() const {
  std::vector<Label> out;
  for (const Label* l : {&u, &v, &w})
    if (l->is_var() && std::find(out.begin(), out.end(), *l) == out.end()) out.push_back(*l);
  if (is_eq && !out.empty()) {
    out.clear();
    for (const Label* l : {&u, &v})
      if (l->is_var() && std::find(out.begin(), out.end(), *l) == out.end()) out.push_back(*l);
  }
  return out;
}

std::string RelGoal::text() const {
  if (is_eq) return "(" + u.text() + " = " + v.text() + ")";
  return "(" + u.text() + "," + v.text() + " |> " + w.text() + ")";
}

// -------------------------------------------------------------------------
// Structural steps

StructStep step_e(const RelAtom& t) {
  return {RuleId::E, {t}, {}, {{t.right, t.left, t.parent}}, {}};
}

StructStep step_a(const RelAtom& t1, const RelAtom& t2, const Label& fresh) {
  if (t2.parent != t1.left) throw std::invalid_argument("A: atoms do not chain");
  return {RuleId::A,
          {t1, t2},
          {},
          {{t2.left, fresh, t1.parent}, {t1.right, t2.right, fresh}},
          {fresh}};
}

StructStep step_ac(const RelAtom& t, const Label& fresh) {
  if (t.left != t.parent) throw std::invalid_argument("Ac: atom must be (x,y |> x)");
  return {RuleId::Ac, {t}, {}, {{t.left, fresh, t.left}, {t.right, t.right, fresh}}, {fresh}};
}

StructStep step_u(const Label& x) {
  return {RuleId::U, {}, {}, {{x, Label::eps(), x}}, {}};
}

StructStep step_eq1(const RelAtom& t) {
  if (!t.left.is_eps() || t.right.is_eps()) throw std::invalid_argument("Eq1: bad principal");
  return {RuleId::Eq1, {t}, Subst::single(t.right, t.parent), {{Label::eps(), t.parent, t.parent}}, {}};
}

StructStep step_eq2(const RelAtom& t) {
  if (!t.left.is_eps() || t.parent.is_eps()) throw std::invalid_argument("Eq2: bad principal");
  return {RuleId::Eq2, {t}, Subst::single(t.parent, t.right), {{Label::eps(), t.right, t.right}}, {}};
}

StructStep step_p(const RelAtom& keep, const RelAtom& drop) {
  if (keep.left != drop.left || keep.right != drop.right || keep.parent == drop.parent ||
      drop.parent.is_eps())
    throw std::invalid_argument("P: bad principal pair");
  return {RuleId::P, {keep, drop}, Subst::single(drop.parent, keep.parent), {keep}, {}};
}

StructStep step_t(const Label& a, const Label& b, const Label& fresh) {
  return {RuleId::T, {}, {}, {{a, b, fresh}}, {fresh}};
}

StructStep step_iu(const RelAtom& t) {
  if (!t.parent.is_eps()) throw std::invalid_argument("IU: bad principal");
  Subst th;
  if (!t.left.is_eps()) th.bind(t.left, Label::eps());
  if (!t.right.is_eps()) th.bind(t.right, Label::eps());
  return {RuleId::IU, {t}, th, {{Label::eps(), Label::eps(), Label::eps()}}, {}};
}

StructStep step_c(const RelAtom& keep, const RelAtom& drop) {
  if (keep.left != drop.left || keep.parent != drop.parent || keep.right == drop.right ||
      drop.right.is_eps())
    throw std::invalid_argument("C: bad principal pair");
  return {RuleId::C, {keep, drop}, Subst::single(drop.right, keep.right), {keep}, {}};
}

namespace {

// Recompute a step's products from its rule and principals; guards s_apply
// against malformed sequences.
std::vector<RelAtom> schema_products(const StructStep& st, size_t index) {
  auto bad = [&](const char* why) -> std::vector<RelAtom> { throw UndefinedStep(index, why); };
  switch (st.rule) {
    case RuleId::E:
      if (st.principal.size() != 1) return bad("E expects one principal");
      return {{st.principal[0].right, st.principal[0].left, st.principal[0].parent}};
    case RuleId::A: {
      if (st.principal.size() != 2 || st.introduced.size() != 1) return bad("A expects two principals and a fresh label");
      const RelAtom& t1 = st.principal[0];
      const RelAtom& t2 = st.principal[1];
      if (t2.parent != t1.left) return bad("A principals do not chain");
      const Label& w = st.introduced[0];
      return {{t2.left, w, t1.parent}, {t1.right, t2.right, w}};
    }
    case RuleId::Ac: {
      if (st.principal.size() != 1 || st.introduced.size() != 1) return bad("Ac expects one principal and a fresh label");
      const RelAtom& t = st.principal[0];
      if (t.left != t.parent) return bad("Ac principal must be (x,y |> x)");
      const Label& w = st.introduced[0];
      return {{t.left, w, t.left}, {t.right, t.right, w}};
    }
    case RuleId::U:
      if (st.produced.size() != 1 || !st.produced[0].right.is_eps() ||
          st.produced[0].left != st.produced[0].parent)
        return bad("U must produce (x,eps |> x)");
      return st.produced;
    case RuleId::Eq1: {
      if (st.principal.size() != 1) return bad("Eq1 expects one principal");
      const RelAtom& t = st.principal[0];
      if (!t.left.is_eps() || t.right.is_eps()) return bad("Eq1 principal must be (eps,w |> w'), w != eps");
      if (!(st.theta == Subst::single(t.right, t.parent))) return bad("Eq1 substitution mismatch");
      return {{Label::eps(), t.parent, t.parent}};
    }
    case RuleId::Eq2: {
      if (st.principal.size() != 1) return bad("Eq2 expects one principal");
      const RelAtom& t = st.principal[0];
      if (!t.left.is_eps() || t.parent.is_eps()) return bad("Eq2 principal must be (eps,w' |> w), w != eps");
      if (!(st.theta == Subst::single(t.parent, t.right))) return bad("Eq2 substitution mismatch");
      return {{Label::eps(), t.right, t.right}};
    }
    case RuleId::P: {
      if (st.principal.size() != 2) return bad("P expects two principals");
      const RelAtom& keep = st.principal[0];
      const RelAtom& drop = st.principal[1];
      if (keep.left != drop.left || keep.right != drop.right || keep.parent == drop.parent)
        return bad("P principals must share children");
      if (drop.parent.is_eps()) return bad("P may not substitute eps away");
      return {keep};
    }
    case RuleId::T:
      if (st.produced.size() != 1 || st.introduced.size() != 1 ||
          st.produced[0].parent != st.introduced[0])
        return bad("T must produce (a,b |> c) with c fresh");
      return st.produced;
    case RuleId::IU: {
      if (st.principal.size() != 1 || !st.principal[0].parent.is_eps())
        return bad("IU principal must be (a,b |> eps)");
      return {{Label::eps(), Label::eps(), Label::eps()}};
    }
    case RuleId::C: {
      if (st.principal.size() != 2) return bad("C expects two principals");
      const RelAtom& keep = st.principal[0];
      const RelAtom& drop = st.principal[1];
      if (keep.left != drop.left || keep.parent != drop.parent || keep.right == drop.right)
        return bad("C principals must share left child and parent");
      if (drop.right.is_eps()) return bad("C may not substitute eps away");
      return {keep};
    }
    default:
      return bad("not a structural rule");
  }
}

}  // namespace

std::pair<RelSet, Subst> s_apply(const RelSet& g, const SigmaSeq& sigma) {
  RelSet cur = g;
  Subst th;
  for (size_t i = 0; i < sigma.size(); i++) {
    const StructStep& st = sigma[i];
    for (const RelAtom& p : st.principal)
      if (!cur.count(p)) throw UndefinedStep(i, "principal atom " + p.text() + " absent");
    std::vector<RelAtom> prod = schema_products(st, i);
    RelSet next;
    for (const RelAtom& a : cur) next.insert(st.theta(a));
    next.insert(prod.begin(), prod.end());
    cur = std::move(next);
    th = th.then(st.theta);
  }
  return {std::move(cur), std::move(th)};
}

// -------------------------------------------------------------------------
// Equality closure

EqClasses::EqClasses(const RelSet& g) {
  for (const RelAtom& a : g) {
    labels_hint_.insert(a.left);
    labels_hint_.insert(a.right);
    labels_hint_.insert(a.parent);
  }
  labels_hint_.insert(Label::eps());
  RelSet cur = g;
  for (;;) {
    const RelAtom* pick = nullptr;
    for (const RelAtom& a : cur) {
      if (a.left.is_eps() && a.right != a.parent) {
        pick = &a;
        break;
      }
    }
    if (!pick) break;
    StructStep st = pick->right.is_eps() ? step_eq2(*pick) : step_eq1(*pick);
    RelSet next;
    for (const RelAtom& x : cur) next.insert(st.theta(x));
    next.insert(st.produced.begin(), st.produced.end());
    cur = std::move(next);
    composite_ = composite_.then(st.theta);
    witness_.push_back(std::move(st));
  }
}

Label EqClasses::rep(const Label& l) const { return composite_(l); }

std::vector<std::vector<Label>> EqClasses::classes() const {
  std::map<Label, std::vector<Label>> by_rep;
  for (const Label& l : labels_hint_) by_rep[rep(l)].push_back(l);
  std::vector<std::vector<Label>> out;
  for (auto& [r, ls] : by_rep) out.push_back(std::move(ls));
  return out;
}

bool sigma_proves(const RelSet& g, const SigmaSeq& sigma, const RelGoal& goal) {
  try {
    auto [s, th] = s_apply(g, sigma);
    RelGoal gg = goal.apply(th);
    EqClasses eq(s);
    if (gg.is_eq) return eq.equal(gg.u, gg.v);
    for (const RelAtom& a : s)
      if (eq.equal(gg.u, a.left) && eq.equal(gg.v, a.right) && eq.equal(gg.w, a.parent)) return true;
    return false;
  } catch (const UndefinedStep&) {
    return false;
  }
}

// -------------------------------------------------------------------------
// Bounded entailment search

namespace {

// A search node: the atom set, the substitution accumulated so far, and the
// steps added relative to the parent node. Full witnesses are rebuilt by
// walking the parent chain, which keeps expansion cheap.
struct SNode {
  RelSet atoms;
  SigmaSeq delta;
  Subst theta;
  std::set<Label> introduced;
  int parent = -1;
  int a = 0, u = 0, t = 0, p = 0, iu = 0, c = 0;
};

// E-completion plus the safe eps-form merges (eps,x |> eps) and (eps,eps |> y).
// Atoms of the shape (eps,x |> y) with x,y both proper are kept: they feed the
// final equality check and may serve as principals of later steps.
void close_node(SNode& s) {
  for (;;) {
    bool changed = false;
    for (const RelAtom& a : s.atoms) {
      RelAtom flip{a.right, a.left, a.parent};
      if (!s.atoms.count(flip)) {
        s.delta.push_back(step_e(a));
        s.atoms.insert(flip);
        changed = true;
        break;
      }
      if (a.left.is_eps() && a.right != a.parent && (a.right.is_eps() || a.parent.is_eps())) {
        StructStep st = a.right.is_eps() ? step_eq2(a) : step_eq1(a);
        RelSet next;
        for (const RelAtom& x : s.atoms) next.insert(st.theta(x));
        next.insert(st.produced.begin(), st.produced.end());
        s.atoms = std::move(next);
        s.theta = s.theta.then(st.theta);
        std::set<Label> intro2;
        for (const Label& l : s.introduced) intro2.insert(st.theta(l));
        s.introduced = std::move(intro2);
        s.delta.push_back(std::move(st));
        changed = true;
        break;
      }
    }
    if (!changed) return;
  }
}

std::string canonical_key(const SNode& s) {
  // rename introduced labels in first-occurrence order over the sorted atoms
  std::map<Label, std::string> ren;
  auto name_of = [&](const Label& l) -> std::string {
    if (!s.introduced.count(l)) return l.text();
    auto it = ren.find(l);
    if (it != ren.end()) return it->second;
    std::string n = "#" + std::to_string(ren.size());
    ren.emplace(l, n);
    return n;
  };
  std::ostringstream os;
  for (const RelAtom& a : s.atoms)
    os << name_of(a.left) << "," << name_of(a.right) << ">" << name_of(a.parent) << ";";
  os << "|";
  for (const auto& [k, v] : s.theta.mapping()) os << name_of(k) << ">" << name_of(v) << ";";
  return os.str();
}

struct FoundCandidate {
  Subst assignment;
  int node;
  RelAtom matched;
  int unsat = 0;  // successor goals grounded by this assignment that fail here
  int sat = 0;    // ... and that already check out in this node
};

struct Engine {
  const RelGoal& goal;
  const RBudget& budget;
  const std::vector<SuccessorGoal>* successor_goals = nullptr;
  bool goal_has_vars = false;
  std::set<Label> goal_ground_labels;
  bool eps_in_context = false;
  long transient = 0;
  int states = 0;
  std::deque<SNode> arena;

  Label fresh_transient() { return Label::world("_t" + std::to_string(transient++)); }

  SigmaSeq full_steps(int idx) const {
    std::vector<int> chain;
    for (int i = idx; i >= 0; i = arena[i].parent) chain.push_back(i);
    SigmaSeq out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      out.insert(out.end(), arena[*it].delta.begin(), arena[*it].delta.end());
    return out;
  }

  std::set<Label> allowed_u(const SNode& s) const {
    std::set<Label> out;
    for (const Label& l : goal_ground_labels) out.insert(s.theta(l));
    out.insert(s.introduced.begin(), s.introduced.end());
    out.erase(Label::eps());
    if (eps_in_context) out.insert(Label::eps());
    return out;
  }

  std::set<Label> label_pool(const SNode& s) const {
    std::set<Label> out;
    for (const RelAtom& a : s.atoms) {
      out.insert(a.left);
      out.insert(a.right);
      out.insert(a.parent);
    }
    for (const Label& l : goal_ground_labels) out.insert(s.theta(l));
    out.insert(s.introduced.begin(), s.introduced.end());
    return out;
  }

  // Match the goal (through the node's substitution) against the node's
  // atoms; append any assignments found. Duplicate assignments are kept only
  // a couple of times: a different witness for the same assignment is
  // occasionally useful, an endless stream of them is not.
  static constexpr int kPerShape = 2;

  int score_successors(const SNode& s, const Subst& bind, int& sat) const {
    int unsat = 0;
    sat = 0;
    if (!successor_goals) return 0;
    for (const SuccessorGoal& raw : *successor_goals) {
      RelGoal gj = raw.goal.apply(bind).apply(s.theta);
      if (!gj.ground()) continue;
      // the successor sees its own extra atoms too; ground them the same way
      RelSet atoms2 = s.atoms;
      bool assessable = true;
      for (const RelAtom& e : raw.extra) {
        RelAtom img = s.theta(bind(e));
        if (img.left.is_var() || img.right.is_var() || img.parent.is_var()) {
          assessable = false;
          break;
        }
        atoms2.insert(img);
      }
      if (!assessable) continue;
      EqClasses eq2(atoms2);
      bool ok = false;
      if (gj.is_eq) {
        ok = eq2.equal(gj.u, gj.v);
      } else {
        for (const RelAtom& a : atoms2)
          if (eq2.equal(gj.u, a.left) && eq2.equal(gj.v, a.right) && eq2.equal(gj.w, a.parent)) {
            ok = true;
            break;
          }
      }
      if (ok)
        sat++;
      else
        unsat++;
    }
    return unsat;
  }

  void scan(int idx, std::vector<FoundCandidate>& out, std::map<std::string, int>& seen,
            int& full_hits) const {
    const SNode& s = arena[idx];
    RelGoal g = goal.apply(s.theta);
    EqClasses eq(s.atoms);
    if (g.is_eq) {
      if (!g.u.is_var() && !g.v.is_var() && eq.equal(g.u, g.v)) {
        if (seen["<eq>"]++ == 0) out.push_back({Subst(), idx, RelAtom{}});
      }
      return;
    }
    for (const RelAtom& a : s.atoms) {
      std::map<Label, Label> bind;
      bool ok = true;
      auto comp = [&](const Label& gc, const Label& ac) {
        if (!ok) return;
        if (gc.is_var()) {
          auto it = bind.find(gc);
          if (it == bind.end())
            bind.emplace(gc, ac);
          else if (!eq.equal(it->second, ac))
            ok = false;
        } else if (!eq.equal(gc, ac)) {
          ok = false;
        }
      };
      comp(g.u, a.left);
      comp(g.v, a.right);
      comp(g.w, a.parent);
      if (!ok) continue;
      Subst asg;
      for (const auto& [k, v] : bind) asg.bind(k, v);
      // Shape key: bound transients are described by the atoms that mention
      // them, so differently derived fresh labels stay distinguishable.
      auto describe = [&](const Label& v) -> std::string {
        if (!s.introduced.count(v)) return v.text();
        std::string d = "#[";
        for (const RelAtom& t : s.atoms) {
          if (!(t.left == v || t.right == v || t.parent == v)) continue;
          auto nm = [&](const Label& l) -> std::string {
            if (l == v) return "#";
            if (s.introduced.count(l)) return "?";
            return l.text();
          };
          d += nm(t.left) + "," + nm(t.right) + ">" + nm(t.parent) + ";";
        }
        return d + "]";
      };
      std::ostringstream key;
      for (const auto& [k, v] : bind) key << k.text() << ">" << describe(v) << ";";
      if (seen[key.str()]++ >= kPerShape) continue;
      int sat = 0;
      int unsat = score_successors(s, asg, sat);
      if (unsat == 0) full_hits++;
      out.push_back({std::move(asg), idx, a, unsat, sat});
    }
  }
};

// Greedy backward simplification of a witness: drop any step whose removal
// keeps the sequence defined and the goal provable.
SigmaSeq prune_sigma(const RelSet& g, SigmaSeq sigma, const RelGoal& ground_goal) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = sigma.size(); i-- > 0;) {
      SigmaSeq cand;
      cand.reserve(sigma.size() - 1);
      for (size_t j = 0; j < sigma.size(); j++)
        if (j != i) cand.push_back(sigma[j]);
      if (sigma_proves(g, cand, ground_goal)) {
        sigma = std::move(cand);
        changed = true;
      }
    }
  }
  return sigma;
}

}  // namespace

std::vector<RCandidate> r_candidates(const RelSet& g, const RelGoal& goal, const RBudget& budget,
                                     size_t max_candidates, LabelGen* gen,
                                     const std::map<Label, Label>* hints, bool* exhausted,
                                     const std::vector<SuccessorGoal>* successor_goals) {
  for (const RelAtom& a : g)
    if (a.left.is_var() || a.right.is_var() || a.parent.is_var())
      throw std::invalid_argument("r_candidates: left-hand side must be ground");

  Engine eng{goal, budget, successor_goals, false, {}, false, 0, 0, {}};
  for (const Label* l : {&goal.u, &goal.v, &goal.w}) {
    if (l == &goal.w && goal.is_eq) continue;
    if (l->is_var())
      eng.goal_has_vars = true;
    else if (!l->is_eps())
      eng.goal_ground_labels.insert(*l);
    else
      eng.eps_in_context = true;
  }
  for (const RelAtom& a : g)
    if (a.left.is_eps() || a.right.is_eps() || a.parent.is_eps()) eng.eps_in_context = true;

  std::vector<FoundCandidate> found;
  std::map<std::string, int> seen_candidates;
  std::set<std::string> visited;

  int full_hits = 0;  // candidates all of whose grounded successor goals hold
  {
    SNode init;
    init.atoms = g;
    close_node(init);
    eng.arena.push_back(std::move(init));
  }
  visited.insert(canonical_key(eng.arena[0]));
  eng.scan(0, found, seen_candidates, full_hits);

  bool want_one = !eng.goal_has_vars;
  bool truncated = false;
  std::deque<int> queue{0};
  while (!queue.empty()) {
    if (eng.states >= budget.max_steps) {
      truncated = true;
      break;
    }
    if (want_one && !found.empty()) break;
    if (full_hits >= 8 || found.size() >= 4096) break;
    int cur_idx = queue.front();
    queue.pop_front();

    auto push = [&](SNode&& next) {
      close_node(next);
      std::string key = canonical_key(next);
      if (!visited.insert(key).second) return;
      eng.states++;
      next.parent = cur_idx;
      eng.arena.push_back(std::move(next));
      int idx = static_cast<int>(eng.arena.size()) - 1;
      eng.scan(idx, found, seen_candidates, full_hits);
      queue.push_back(idx);
    };
    auto fork = [&](const StructStep& st) {
      const SNode& cur = eng.arena[cur_idx];
      SNode next;
      next.atoms = cur.atoms;
      next.theta = cur.theta;
      next.introduced = cur.introduced;
      next.a = cur.a;
      next.u = cur.u;
      next.t = cur.t;
      next.p = cur.p;
      next.iu = cur.iu;
      next.c = cur.c;
      for (const Label& l : st.introduced) next.introduced.insert(l);
      if (st.theta.empty()) {
        next.atoms.insert(st.produced.begin(), st.produced.end());
      } else {
        RelSet atoms2;
        for (const RelAtom& x : next.atoms) atoms2.insert(st.theta(x));
        atoms2.insert(st.produced.begin(), st.produced.end());
        next.atoms = std::move(atoms2);
        next.theta = next.theta.then(st.theta);
        std::set<Label> intro2;
        for (const Label& l : next.introduced) intro2.insert(st.theta(l));
        next.introduced = std::move(intro2);
      }
      next.delta.push_back(st);
      return next;
    };

    // A and Ac
    if (eng.arena[cur_idx].a < budget.max_a) {
      std::vector<RelAtom> atoms(eng.arena[cur_idx].atoms.begin(), eng.arena[cur_idx].atoms.end());
      for (const RelAtom& t1 : atoms) {
        for (const RelAtom& t2 : atoms) {
          if (t2.parent != t1.left) continue;
          Label w = eng.fresh_transient();
          SNode next;
          if (t1 == t2) {
            if (t1.left != t1.parent) continue;
            next = fork(step_ac(t1, w));
          } else {
            next = fork(step_a(t1, t2, w));
          }
          next.a++;
          push(std::move(next));
        }
      }
    }
    // U
    if (eng.arena[cur_idx].u < budget.max_u) {
      for (const Label& l : eng.allowed_u(eng.arena[cur_idx])) {
        if (eng.arena[cur_idx].atoms.count({l, Label::eps(), l})) continue;
        SNode next = fork(step_u(l));
        next.u++;
        push(std::move(next));
      }
    }
    // T
    if (budget.extras.count(RuleId::T) && eng.arena[cur_idx].t < budget.max_t) {
      auto pool = eng.label_pool(eng.arena[cur_idx]);
      pool.insert(Label::eps());
      for (auto i = pool.begin(); i != pool.end(); ++i) {
        for (auto j = i; j != pool.end(); ++j) {
          SNode next = fork(step_t(*i, *j, eng.fresh_transient()));
          next.t++;
          push(std::move(next));
        }
      }
    }
    // P
    if (budget.extras.count(RuleId::P) && eng.arena[cur_idx].p < budget.max_p) {
      std::vector<RelAtom> atoms(eng.arena[cur_idx].atoms.begin(), eng.arena[cur_idx].atoms.end());
      for (const RelAtom& keep : atoms) {
        for (const RelAtom& drop : atoms) {
          if (keep.left != drop.left || keep.right != drop.right || keep.parent == drop.parent)
            continue;
          if (drop.parent.is_eps()) continue;
          SNode next = fork(step_p(keep, drop));
          next.p++;
          push(std::move(next));
        }
      }
    }
    // IU
    if (budget.extras.count(RuleId::IU) && eng.arena[cur_idx].iu < budget.max_iu) {
      std::vector<RelAtom> atoms(eng.arena[cur_idx].atoms.begin(), eng.arena[cur_idx].atoms.end());
      for (const RelAtom& a : atoms) {
        if (!a.parent.is_eps() || (a.left.is_eps() && a.right.is_eps())) continue;
        SNode next = fork(step_iu(a));
        next.iu++;
        push(std::move(next));
      }
    }
    // C
    if (budget.extras.count(RuleId::C) && eng.arena[cur_idx].c < budget.max_c) {
      std::vector<RelAtom> atoms(eng.arena[cur_idx].atoms.begin(), eng.arena[cur_idx].atoms.end());
      for (const RelAtom& keep : atoms) {
        for (const RelAtom& drop : atoms) {
          if (keep.left != drop.left || keep.parent != drop.parent || keep.right == drop.right)
            continue;
          if (drop.right.is_eps()) continue;
          SNode next = fork(step_c(keep, drop));
          next.c++;
          push(std::move(next));
        }
      }
    }
  }

  if (exhausted) *exhausted = !truncated;

  // Order: hint-consistent first, then candidates that avoid introduced
  // labels, then discovery order.
  auto mismatch_count = [&](const FoundCandidate& c) {
    if (!hints) return 0;
    int m = 0;
    for (const auto& [k, v] : c.assignment.mapping()) {
      auto it = hints->find(k);
      if (it != hints->end() && it->second != v) m++;
    }
    return m;
  };
  auto fresh_count = [&](const FoundCandidate& c) {
    int n = 0;
    for (const auto& [k, v] : c.assignment.mapping())
      if (v.is_world() && v.name().rfind("_t", 0) == 0) n++;
    return n;
  };
  std::vector<size_t> order(found.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    if (found[x].unsat != found[y].unsat) return found[x].unsat < found[y].unsat;
    if (found[x].sat != found[y].sat) return found[x].sat > found[y].sat;
    int mx = mismatch_count(found[x]), my = mismatch_count(found[y]);
    if (mx != my) return mx < my;
    int fx = fresh_count(found[x]), fy = fresh_count(found[y]);
    if (fx != fy) return fx < fy;
    return x < y;
  });

  // Finalize: prune each witness, then rename transient labels through the
  // caller's generator so replays never capture existing labels.
  LabelGen local("w");
  LabelGen* g2 = gen;
  if (!g2) {
    for (const RelAtom& a : g) {
      local.avoid(a.left);
      local.avoid(a.right);
      local.avoid(a.parent);
    }
    for (const Label* l : {&goal.u, &goal.v, &goal.w}) local.avoid(*l);
    g2 = &local;
  }
  std::vector<RCandidate> out;
  out.reserve(order.size());
  for (size_t idx : order) {
    RCandidate c{found[idx].assignment, eng.full_steps(found[idx].node), found[idx].matched};
    RelGoal grounded = goal.apply(c.assignment);
    c.sigma = prune_sigma(g, std::move(c.sigma), grounded);
    // collect transients still referenced
    std::map<Label, Label> ren;
    auto remap = [&](const Label& l) -> Label {
      if (!(l.is_world() && l.name().rfind("_t", 0) == 0)) return l;
      auto it = ren.find(l);
      if (it != ren.end()) return it->second;
      Label n = g2->fresh();
      ren.emplace(l, n);
      return n;
    };
    auto remap_atom = [&](const RelAtom& a) -> RelAtom {
      return {remap(a.left), remap(a.right), remap(a.parent)};
    };
    for (StructStep& st : c.sigma) {
      for (RelAtom& a : st.principal) a = remap_atom(a);
      for (RelAtom& a : st.produced) a = remap_atom(a);
      for (Label& l : st.introduced) l = remap(l);
      Subst th2;
      for (const auto& [k, v] : st.theta.mapping()) th2.bind(remap(k), remap(v));
      st.theta = th2;
    }
    Subst asg2;
    for (const auto& [k, v] : c.assignment.mapping()) asg2.bind(k, remap(v));
    c.assignment = asg2;
    c.matched = remap_atom(c.matched);
    out.push_back(std::move(c));
    if (out.size() >= max_candidates) break;
  }
  return out;
}


std::optional<SigmaSeq> r_entails(const RelSet& g, const RelGoal& goal, const RBudget& budget,
                                  LabelGen* gen) {
  if (!goal.ground()) throw std::invalid_argument("r_entails: goal must be ground");
  auto cands = r_candidates(g, goal, budget, 1, gen);
  if (cands.empty()) return std::nullopt;
  return cands[0].sigma;
}

// -------------------------------------------------------------------------
// Labelled binary trees

LabelledTree LabelledTree::leaf(Label l) {
  auto n = std::make_shared<Node>();
  n->root = std::move(l);
  return LabelledTree(std::move(n));
}

LabelledTree LabelledTree::node(Label root, LabelledTree left, LabelledTree right) {
  auto n = std::make_shared<Node>();
  n->root = std::move(root);
  n->left = left.n_;
  n->right = right.n_;
  return LabelledTree(std::move(n));
}

LabelledTree LabelledTree::left() const {
  if (is_leaf()) throw std::logic_error("left() on a leaf");
  return LabelledTree(n_->left);
}

LabelledTree LabelledTree::right() const {
  if (is_leaf()) throw std::logic_error("right() on a leaf");
  return LabelledTree(n_->right);
}

int LabelledTree::width() const {
  if (is_leaf()) return 1;
  return LabelledTree(n_->left).width() + LabelledTree(n_->right).width();
}

std::multiset<Label> LabelledTree::leaf_labels() const {
  std::multiset<Label> out;
  std::function<void(const Node*)> walk = [&](const Node* n) {
    if (!n->left) {
      out.insert(n->root);
      return;
    }
    walk(n->left.get());
    walk(n->right.get());
  };
  walk(n_.get());
  return out;
}

RelSet LabelledTree::rel_atoms() const {
  if (is_leaf()) throw std::invalid_argument("a width-1 tree encodes no relational atoms");
  RelSet out;
  std::function<void(const Node*)> walk = [&](const Node* n) {
    if (!n->left) return;
    out.insert({n->left->root, n->right->root, n->root});
    walk(n->left.get());
    walk(n->right.get());
  };
  walk(n_.get());
  return out;
}

std::optional<std::vector<LabelledTree>> trees_of(const RelSet& r) {
  std::map<Label, std::pair<Label, Label>> expand;
  for (const RelAtom& a : r) {
    if (expand.count(a.parent)) return std::nullopt;  // label expanded twice
    expand[a.parent] = {a.left, a.right};
  }
  std::set<Label> children;
  for (const RelAtom& a : r) {
    children.insert(a.left);
    children.insert(a.right);
  }
  std::vector<Label> roots;
  for (const auto& [p, _] : expand)
    if (!children.count(p)) roots.push_back(p);
  if (r.empty()) return std::vector<LabelledTree>{};
  if (roots.empty()) return std::nullopt;  // cyclic

  std::set<Label> used;
  std::function<std::optional<LabelledTree>(const Label&, std::set<Label>&)> build =
      [&](const Label& l, std::set<Label>& onpath) -> std::optional<LabelledTree> {
    auto it = expand.find(l);
    if (it == expand.end() || used.count(l)) return LabelledTree::leaf(l);
    if (onpath.count(l)) return std::nullopt;
    onpath.insert(l);
    used.insert(l);
    auto lt = build(it->second.first, onpath);
    auto rt = build(it->second.second, onpath);
    onpath.erase(l);
    if (!lt || !rt) return std::nullopt;
    return LabelledTree::node(l, *lt, *rt);
  };

  std::vector<LabelledTree> out;
  for (const Label& root : roots) {
    std::set<Label> onpath;
    auto t = build(root, onpath);
    if (!t) return std::nullopt;
    out.push_back(*t);
  }
  if (used.size() != expand.size()) return std::nullopt;  // unreachable atoms (cycles)
  return out;
}

// -------------------------------------------------------------------------
// Heuristic permutation solver

namespace {

using LMS = std::multiset<Label>;

LMS ms_intersect(const LMS& a, const LMS& b) {
  LMS out;
  for (auto it = a.begin(); it != a.end();) {
    const Label& l = *it;
    size_t na = a.count(l), nb = b.count(l);
    size_t k = std::min(na, nb);
    for (size_t i = 0; i < k; i++) out.insert(l);
    std::advance(it, na);
  }
  return out;
}

LMS ms_minus(const LMS& a, const LMS& b) {
  LMS out = a;
  for (const Label& l : b) {
    auto it = out.find(l);
    if (it != out.end()) out.erase(it);
  }
  return out;
}

struct Piece {
  Label root;
  LMS leaves;
  std::shared_ptr<Piece> l, r;
  bool is_leaf() const { return !l; }
};
using PiecePtr = std::shared_ptr<Piece>;

PiecePtr make_leaf(const Label& l) {
  return std::make_shared<Piece>(Piece{l, {l}, nullptr, nullptr});
}
PiecePtr make_node(const Label& root, PiecePtr a, PiecePtr b) {
  LMS leaves = a->leaves;
  leaves.insert(b->leaves.begin(), b->leaves.end());
  return std::make_shared<Piece>(Piece{root, std::move(leaves), std::move(a), std::move(b)});
}

// Find a tree-forming subset of `atoms` rooted at `root` with exactly the
// leaf multiset `need`; returns its structure.
PiecePtr find_source(const RelSet& atoms, const Label& root, const LMS& need) {
  std::vector<RelAtom> pool(atoms.begin(), atoms.end());
  std::vector<bool> used(pool.size(), false);
  LMS remaining = need;

  // Full backtracking over leaf-vs-expand choices: try every realization of
  // a subtree rooted at l, feeding each to the continuation.
  using K = std::function<bool(const PiecePtr&)>;
  std::function<bool(const Label&, bool, const K&)> attempt = [&](const Label& l, bool allow_leaf,
                                                                  const K& k) -> bool {
    if (allow_leaf) {
      auto it = remaining.find(l);
      if (it != remaining.end()) {
        remaining.erase(it);
        if (k(make_leaf(l))) return true;
        remaining.insert(l);
      }
    }
    for (size_t i = 0; i < pool.size(); i++) {
      if (used[i] || pool[i].parent != l) continue;
      used[i] = true;
      bool ok = attempt(pool[i].left, true, [&](const PiecePtr& a) {
        return attempt(pool[i].right, true,
                       [&](const PiecePtr& b) { return k(make_node(l, a, b)); });
      });
      if (ok) return true;
      used[i] = false;
    }
    return false;
  };

  // the root itself must be expanded (a bare leaf is not a tree)
  PiecePtr result;
  attempt(root, false, [&](const PiecePtr& p) {
    if (!remaining.empty()) return false;
    result = p;
    return true;
  });
  return result;
}

struct PermCtx {
  RelSet atoms;
  SigmaSeq sigma;
  LabelGen* gen;

  void emit(StructStep st) {
    for (const RelAtom& p : st.principal)
      if (!atoms.count(p)) throw std::logic_error("permutation step on an absent atom " + p.text());
    atoms.insert(st.produced.begin(), st.produced.end());
    sigma.push_back(std::move(st));
  }
  RelAtom atom_of(const Piece& p) const { return {p.l->root, p.r->root, p.root}; }
};

std::pair<PiecePtr, PiecePtr> permute_split(PermCtx& ctx, const PiecePtr& piece, const LMS& la,
                                            const LMS& lb) {
  assert(!piece->is_leaf());
  const LMS& l1 = piece->l->leaves;
  const LMS& l2 = piece->r->leaves;
  RelAtom root_atom = ctx.atom_of(*piece);

  if (la == l1 && lb == l2) return {piece->l, piece->r};
  if (la == l2 && lb == l1) {
    ctx.emit(step_e(root_atom));
    return {piece->r, piece->l};
  }

  LMS lp = ms_intersect(l1, la);       // part of la that comes from the left subtree
  LMS lpp = ms_minus(la, lp);          // the rest comes from the right subtree
  LMS l1_rest = ms_minus(l1, lp);
  LMS l2_rest = ms_minus(l2, lpp);

  if (lpp.empty()) {
    // la inside the left subtree
    auto [a, b1] = permute_split(ctx, piece->l, la, l1_rest);
    Label w = ctx.gen->fresh();
    ctx.emit(step_a(root_atom, {a->root, b1->root, piece->l->root}, w));
    PiecePtr nb = make_node(w, piece->r, b1);
    // produced (r.root, b1.root |> w): children order is (right subtree, b1)
    return {a, nb};
  }
  if (lp.empty()) {
    // la inside the right subtree
    ctx.emit(step_e(root_atom));
    RelAtom flipped{piece->r->root, piece->l->root, piece->root};
    auto [a, b2] = permute_split(ctx, piece->r, la, l2_rest);
    Label w = ctx.gen->fresh();
    ctx.emit(step_a(flipped, {a->root, b2->root, piece->r->root}, w));
    PiecePtr nb = make_node(w, piece->l, b2);
    return {a, nb};
  }
  if (l1_rest.empty()) {
    // the whole left subtree joins la; lb sits inside the right subtree
    auto [a2, b] = permute_split(ctx, piece->r, lpp, lb);
    ctx.emit(step_e({a2->root, b->root, piece->r->root}));
    ctx.emit(step_e(root_atom));
    RelAtom flipped{piece->r->root, piece->l->root, piece->root};
    Label w = ctx.gen->fresh();
    ctx.emit(step_a(flipped, {b->root, a2->root, piece->r->root}, w));
    PiecePtr na = make_node(w, piece->l, a2);
    ctx.emit(step_e({b->root, w, piece->root}));
    return {na, b};
  }
  if (l2_rest.empty()) {
    // the whole right subtree joins la; lb sits inside the left subtree
    auto [a1, b] = permute_split(ctx, piece->l, lp, lb);
    ctx.emit(step_e({a1->root, b->root, piece->l->root}));
    Label w = ctx.gen->fresh();
    ctx.emit(step_a(root_atom, {b->root, a1->root, piece->l->root}, w));
    PiecePtr na = make_node(w, piece->r, a1);
    ctx.emit(step_e({b->root, w, piece->root}));
    return {na, b};
  }

  // both subtrees contribute to both sides
  auto [p5, p6] = permute_split(ctx, piece->l, lp, l1_rest);
  auto [p7, p8] = permute_split(ctx, piece->r, lpp, l2_rest);
  const Label lr = piece->l->root;
  const Label rr = piece->r->root;
  ctx.emit(step_e({p5->root, p6->root, lr}));
  Label wa = ctx.gen->fresh();
  ctx.emit(step_a(root_atom, {p6->root, p5->root, lr}, wa));
  // products: (p6, wa |> root), (rr, p5 |> wa)
  ctx.emit(step_e({p7->root, p8->root, rr}));
  Label wb = ctx.gen->fresh();
  ctx.emit(step_a({rr, p5->root, wa}, {p8->root, p7->root, rr}, wb));
  // products: (p8, wb |> wa), (p5, p7 |> wb)
  ctx.emit(step_e({p8->root, wb, wa}));
  ctx.emit(step_e({p6->root, wa, piece->root}));
  Label wc = ctx.gen->fresh();
  ctx.emit(step_a({wa, p6->root, piece->root}, {wb, p8->root, wa}, wc));
  // products: (wb, wc |> root), (p6, p8 |> wc)
  PiecePtr na = make_node(wb, p5, p7);
  PiecePtr nb = make_node(wc, p6, p8);
  return {na, nb};
}

}  // namespace

std::optional<HeuristicResult> heuristic_solve(const RelSet& g, const LabelledTree& target,
                                               const std::set<Label>& assignable, LabelGen& gen) {
  if (target.is_leaf()) return std::nullopt;
  if (target.root().is_var()) return std::nullopt;

  // validate the target shape: ground leaves, single-occurrence
  // free-variable internal nodes
  std::map<Label, int> internal_count;
  bool shape_ok = true;
  std::function<void(const LabelledTree&, bool)> validate = [&](const LabelledTree& t, bool is_root) {
    if (t.is_leaf()) {
      if (t.root().is_var()) shape_ok = false;
      return;
    }
    if (!is_root) {
      if (!t.root().is_var() || !assignable.count(t.root())) shape_ok = false;
      internal_count[t.root()]++;
    }
    validate(t.left(), false);
    validate(t.right(), false);
  };
  validate(target, true);
  for (const auto& [v, n] : internal_count)
    if (n != 1) shape_ok = false;
  if (!shape_ok) return std::nullopt;

  // Work modulo exchange and label merging: complete the set under E and
  // replay every available merge, so unit splits dissolve before matching.
  RelSet base = g;
  SigmaSeq prefix;
  Subst rep;
  for (;;) {
    bool changed = false;
    for (const RelAtom& a : base) {
      RelAtom flip{a.right, a.left, a.parent};
      if (!base.count(flip)) {
        prefix.push_back(step_e(a));
        base.insert(flip);
        changed = true;
        break;
      }
      if (a.left.is_eps() && a.right != a.parent) {
        StructStep st = a.right.is_eps() ? step_eq2(a) : step_eq1(a);
        RelSet next;
        for (const RelAtom& x : base) next.insert(st.theta(x));
        next.insert(st.produced.begin(), st.produced.end());
        base = std::move(next);
        rep = rep.then(st.theta);
        prefix.push_back(std::move(st));
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }

  std::function<LabelledTree(const LabelledTree&)> rep_tree = [&](const LabelledTree& t) {
    if (t.is_leaf()) return LabelledTree::leaf(rep(t.root()));
    return LabelledTree::node(t.root().is_var() ? t.root() : rep(t.root()), rep_tree(t.left()),
                              rep_tree(t.right()));
  };
  LabelledTree goal_tree = rep_tree(target);

  PiecePtr src = find_source(base, goal_tree.root(), goal_tree.leaf_labels());
  if (!src) return std::nullopt;

  PermCtx ctx{base, {}, &gen};
  Subst assignment;
  std::function<void(const PiecePtr&, const LabelledTree&)> match = [&](const PiecePtr& piece,
                                                                        const LabelledTree& t) {
    if (t.is_leaf()) return;
    LMS la = t.left().leaf_labels();
    LMS lb = t.right().leaf_labels();
    auto [a, b] = permute_split(ctx, piece, la, lb);
    if (!t.left().is_leaf()) {
      assignment.bind(t.left().root(), a->root);
      match(a, t.left());
    }
    if (!t.right().is_leaf()) {
      assignment.bind(t.right().root(), b->root);
      match(b, t.right());
    }
  };
  match(src, goal_tree);

  SigmaSeq sigma = std::move(prefix);
  sigma.insert(sigma.end(), ctx.sigma.begin(), ctx.sigma.end());

  // every target atom, under the assignment, must be derivable from g
  std::vector<RelGoal> goals;
  for (const RelAtom& a : target.rel_atoms())
    goals.push_back(RelGoal::rel(a.left, a.right, a.parent).apply(assignment));
  auto all_proved = [&](const SigmaSeq& s) {
    for (const RelGoal& goal : goals)
      if (!goal.ground() || !sigma_proves(g, s, goal)) return false;
    return true;
  };
  if (!all_proved(sigma)) return std::nullopt;

  // trim completion steps the witness does not actually need
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = sigma.size(); i-- > 0;) {
      SigmaSeq cand;
      for (size_t j = 0; j < sigma.size(); j++)
        if (j != i) cand.push_back(sigma[j]);
      if (all_proved(cand)) {
        sigma = std::move(cand);
        changed = true;
      }
    }
  }
  return HeuristicResult{std::move(assignment), std::move(sigma)};
}

// -------------------------------------------------------------------------
// Brute-force permutation oracle

bool has_tree_subset(const RelSet& atoms, const Label& root, const std::multiset<Label>& leaves) {
  if (leaves.size() < 2) return false;
  return find_source(atoms, root, leaves) != nullptr;
}

std::optional<SigmaSeq> brute_permute(const LabelledTree& source, const Label& root,
                                      const std::multiset<Label>& leaves, int budget) {
  if (source.is_leaf()) return std::nullopt;
  RelSet base = source.rel_atoms();

  // conservation precheck: each label spans a fixed leaf multiset
  std::map<Label, LMS> span;
  std::function<void(const LabelledTree&)> fill = [&](const LabelledTree& t) {
    if (t.is_leaf()) {
      span[t.root()] = {t.root()};
      return;
    }
    fill(t.left());
    fill(t.right());
    LMS s = span[t.left().root()];
    const LMS& r = span[t.right().root()];
    s.insert(r.begin(), r.end());
    span[t.root()] = std::move(s);
  };
  fill(source);
  if (!span.count(root)) return std::nullopt;
  LMS combined;
  for (const Label& l : leaves) {
    if (!span.count(l)) return std::nullopt;
    combined.insert(span[l].begin(), span[l].end());
  }
  if (!(combined == span[root])) return std::nullopt;

  struct BState {
    RelSet atoms;
    SigmaSeq steps;
    std::set<Label> introduced;
  };
  long transient = 0;
  auto close_e = [](BState& s) {
    for (;;) {
      bool changed = false;
      for (const RelAtom& a : s.atoms) {
        RelAtom flip{a.right, a.left, a.parent};
        if (!s.atoms.count(flip)) {
          s.steps.push_back(step_e(a));
          s.atoms.insert(flip);
          changed = true;
          break;
        }
      }
      if (!changed) return;
    }
  };
  auto key_of = [](const BState& s) {
    std::map<Label, std::string> ren;
    std::ostringstream os;
    auto nm = [&](const Label& l) -> std::string {
      if (!s.introduced.count(l)) return l.text();
      auto it = ren.find(l);
      if (it != ren.end()) return it->second;
      std::string n = "#" + std::to_string(ren.size());
      ren.emplace(l, n);
      return n;
    };
    for (const RelAtom& a : s.atoms) os << nm(a.left) << "," << nm(a.right) << ">" << nm(a.parent) << ";";
    return os.str();
  };

  auto finish = [&](const BState& s) -> SigmaSeq {
    // slice the witness down to what the found tree needs, then revalidate
    SigmaSeq sigma = s.steps;
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = sigma.size(); i-- > 0;) {
        SigmaSeq cand;
        for (size_t j = 0; j < sigma.size(); j++)
          if (j != i) cand.push_back(sigma[j]);
        try {
          auto [fin, th] = s_apply(base, cand);
          if (has_tree_subset(fin, root, leaves)) {
            sigma = std::move(cand);
            changed = true;
          }
        } catch (const UndefinedStep&) {
        }
      }
    }
    return sigma;
  };

  BState init{base, {}, {}};
  close_e(init);
  if (has_tree_subset(init.atoms, root, leaves)) return finish(init);

  std::set<std::string> visited{key_of(init)};
  std::deque<BState> queue{init};
  int states = 0;
  while (!queue.empty() && states < budget) {
    BState cur = std::move(queue.front());
    queue.pop_front();
    std::vector<RelAtom> atoms(cur.atoms.begin(), cur.atoms.end());
    for (const RelAtom& t1 : atoms) {
      for (const RelAtom& t2 : atoms) {
        if (t2.parent != t1.left) continue;
        BState next = cur;
        Label w = Label::world("_b" + std::to_string(transient++));
        next.introduced.insert(w);
        if (t1 == t2) {
          if (t1.left != t1.parent) continue;
          next.steps.push_back(step_ac(t1, w));
        } else {
          next.steps.push_back(step_a(t1, t2, w));
        }
        const StructStep& st = next.steps.back();
        next.atoms.insert(st.produced.begin(), st.produced.end());
        close_e(next);
        states++;
        if (!visited.insert(key_of(next)).second) continue;
        if (has_tree_subset(next.atoms, root, leaves)) return finish(next);
        queue.push_back(std::move(next));
      }
    }
  }
  return std::nullopt;
}

}  // namespace bbi
