#include "bbi/search.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <sstream>

namespace bbi {

namespace {

using Clock = std::chrono::steady_clock;

struct TimeoutSignal {};

SymSequent subst_sym(const SymSequent& s, const Subst& th) {
  SymSequent out;
  for (const RelAtom& a : s.rels) out.rels.insert(th(a));
  for (const LabelledFormula& f : s.lhs) out.lhs.add({th(f.label), f.formula});
  for (const LabelledFormula& f : s.rhs) out.rhs.add({th(f.label), f.formula});
  return out;
}

bool atom_ground(const RelAtom& a) {
  return !a.left.is_var() && !a.right.is_var() && !a.parent.is_var();
}

struct NegStep {
  RuleId rule;
  std::optional<LabelledFormula> principal;
  std::vector<Label> labels;
  std::vector<RelAtom> rels;
  std::vector<SymSequent> premises;
};

// The first applicable invertible step; non-branching rules come before the
// branching ones, so derivations stay small.
std::optional<NegStep> first_negative(const SymSequent& s, LabelGen& gen,
                                      const std::set<RuleId>& extras) {
  for (const LabelledFormula& f : s.lhs)
    if (f.formula.conn() == Conn::Bot) return NegStep{RuleId::BotL, f, {}, {}, {}};
  for (const LabelledFormula& f : s.rhs)
    if (f.formula.conn() == Conn::Top) return NegStep{RuleId::TopR, f, {}, {}, {}};

  // auxiliary structural rules that only merge labels
  if (extras.count(RuleId::P)) {
    for (const RelAtom& keep : s.rels)
      for (const RelAtom& drop : s.rels)
        if (atom_ground(keep) && atom_ground(drop) && keep.left == drop.left &&
            keep.right == drop.right && keep.parent != drop.parent && !drop.parent.is_eps()) {
          SymSequent pr = s;
          pr.rels.erase(drop);
          pr = subst_sym(pr, Subst::single(drop.parent, keep.parent));
          return NegStep{RuleId::P, std::nullopt, {}, {keep, drop}, {pr}};
        }
  }
  if (extras.count(RuleId::IU)) {
    for (const RelAtom& t : s.rels)
      if (atom_ground(t) && t.parent.is_eps() && !(t.left.is_eps() && t.right.is_eps())) {
        Subst th;
        if (!t.left.is_eps()) th.bind(t.left, Label::eps());
        if (!t.right.is_eps()) th.bind(t.right, Label::eps());
        SymSequent pr = subst_sym(s, th);
        pr.rels.insert({Label::eps(), Label::eps(), Label::eps()});
        return NegStep{RuleId::IU, std::nullopt, {}, {t}, {pr}};
      }
  }
  if (extras.count(RuleId::C)) {
    for (const RelAtom& keep : s.rels)
      for (const RelAtom& drop : s.rels)
        if (atom_ground(keep) && atom_ground(drop) && keep.left == drop.left &&
            keep.parent == drop.parent && keep.right != drop.right && !drop.right.is_eps()) {
          SymSequent pr = s;
          pr.rels.erase(drop);
          pr = subst_sym(pr, Subst::single(drop.right, keep.right));
          return NegStep{RuleId::C, std::nullopt, {}, {keep, drop}, {pr}};
        }
  }

  // non-branching logical rules
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::And) continue;
    SymSequent pr = s;
    pr.lhs.remove_one(f);
    pr.lhs.add({f.label, f.formula.lhs()});
    pr.lhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::AndL, f, {}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.rhs) {
    if (f.formula.conn() != Conn::Imp) continue;
    SymSequent pr = s;
    pr.rhs.remove_one(f);
    pr.lhs.add({f.label, f.formula.lhs()});
    pr.rhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::ImpR, f, {}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::Not) continue;
    SymSequent pr = s;
    pr.lhs.remove_one(f);
    pr.rhs.add({f.label, f.formula.sub()});
    return NegStep{RuleId::NotL, f, {}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.rhs) {
    if (f.formula.conn() != Conn::Not) continue;
    SymSequent pr = s;
    pr.rhs.remove_one(f);
    pr.lhs.add({f.label, f.formula.sub()});
    return NegStep{RuleId::NotR, f, {}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.rhs) {
    if (f.formula.conn() != Conn::Or) continue;
    SymSequent pr = s;
    pr.rhs.remove_one(f);
    pr.rhs.add({f.label, f.formula.lhs()});
    pr.rhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::OrR, f, {}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::Star) continue;
    Label x = gen.fresh();
    Label y = gen.fresh();
    SymSequent pr = s;
    pr.lhs.remove_one(f);
    pr.rels.insert({x, y, f.label});
    pr.lhs.add({x, f.formula.lhs()});
    pr.lhs.add({y, f.formula.rhs()});
    return NegStep{RuleId::StarL, f, {x, y}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.rhs) {
    if (f.formula.conn() != Conn::Wand) continue;
    Label x = gen.fresh();
    Label z = gen.fresh();
    SymSequent pr = s;
    pr.rhs.remove_one(f);
    pr.rels.insert({x, f.label, z});
    pr.lhs.add({x, f.formula.lhs()});
    pr.rhs.add({z, f.formula.rhs()});
    return NegStep{RuleId::WandR, f, {x, z}, {}, {pr}};
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::MEmp) continue;
    SymSequent pr = s;
    pr.lhs.remove_one(f);
    pr.rels.insert({Label::eps(), f.label, Label::eps()});
    return NegStep{RuleId::MEmpL, f, {}, {}, {pr}};
  }

  // branching logical rules
  for (const LabelledFormula& f : s.rhs) {
    if (f.formula.conn() != Conn::And) continue;
    SymSequent p1 = s, p2 = s;
    p1.rhs.remove_one(f);
    p2.rhs.remove_one(f);
    p1.rhs.add({f.label, f.formula.lhs()});
    p2.rhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::AndR, f, {}, {}, {p1, p2}};
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::Or) continue;
    SymSequent p1 = s, p2 = s;
    p1.lhs.remove_one(f);
    p2.lhs.remove_one(f);
    p1.lhs.add({f.label, f.formula.lhs()});
    p2.lhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::OrL, f, {}, {}, {p1, p2}};
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.formula.conn() != Conn::Imp) continue;
    SymSequent p1 = s, p2 = s;
    p1.lhs.remove_one(f);
    p2.lhs.remove_one(f);
    p1.rhs.add({f.label, f.formula.lhs()});
    p2.lhs.add({f.label, f.formula.rhs()});
    return NegStep{RuleId::ImpL, f, {}, {}, {p1, p2}};
  }
  return std::nullopt;
}

struct Goal {
  SymSequent seq;
  std::map<LabelledFormula, int> fired;
};

struct Ctx {
  const SearchOptions& opts;
  int mult;
  Clock::time_point deadline;
  LabelGen world_gen;
  LabelGen var_gen;
  SearchStats* stats;

  void tick() const {
    if (Clock::now() > deadline) throw TimeoutSignal{};
  }
};

using K = std::function<bool(SymDerivation&&)>;

bool close_goal(Ctx& ctx, const Goal& g, const K& k) {
  ctx.tick();
  if (auto ns = first_negative(g.seq, ctx.world_gen, ctx.opts.extras)) {
    if (ns->premises.empty()) {
      SymDerivation leaf{ns->rule, g.seq, ns->principal, ns->labels, ns->rels, {}};
      return k(std::move(leaf));
    }
    if (ns->premises.size() == 1) {
      Goal child{std::move(ns->premises[0]), g.fired};
      return close_goal(ctx, child, [&](SymDerivation&& d) {
        SymDerivation node{ns->rule, g.seq, ns->principal, ns->labels, ns->rels, {}};
        node.premises.push_back(std::move(d));
        return k(std::move(node));
      });
    }
    Goal c1{std::move(ns->premises[0]), g.fired};
    Goal c2{std::move(ns->premises[1]), g.fired};
    return close_goal(ctx, c1, [&](SymDerivation&& d1) {
      SymDerivation first = std::move(d1);
      return close_goal(ctx, c2, [&](SymDerivation&& d2) {
        SymDerivation node{ns->rule, g.seq, ns->principal, ns->labels, ns->rels, {}};
        node.premises.push_back(first);  // copy: the first branch must survive retries
        node.premises.push_back(std::move(d2));
        return k(std::move(node));
      });
    });
  }

  // stable sequent: closures and positive expansions
  ctx.stats->branches++;
  struct Option {
    int rank;
    std::function<bool()> run;
  };
  std::vector<Option> options;

  for (const LabelledFormula& lf : g.seq.lhs) {
    if (!lf.formula.is_atom()) continue;
    for (const LabelledFormula& rf : g.seq.rhs) {
      if (!(rf.formula == lf.formula)) continue;
      int rank = lf.label == rf.label ? 0 : (lf.label.is_var() || rf.label.is_var() ? 1 : 2);
      options.push_back({rank, [&, lf, rf]() {
                           SymDerivation leaf{RuleId::Id, g.seq, lf, {lf.label, rf.label}, {}, {}};
                           return k(std::move(leaf));
                         }});
    }
  }
  for (const LabelledFormula& rf : g.seq.rhs) {
    if (rf.formula.conn() != Conn::MEmp) continue;
    int rank = rf.label.is_eps() ? 0 : (rf.label.is_var() ? 1 : 2);
    options.push_back({rank, [&, rf]() {
                         SymDerivation leaf{RuleId::MEmpR, g.seq, rf, {rf.label}, {}, {}};
                         return k(std::move(leaf));
                       }});
  }
  for (const LabelledFormula& rf : g.seq.rhs) {
    if (rf.formula.conn() != Conn::Star) continue;
    auto it = g.fired.find(rf);
    if (it != g.fired.end() && it->second >= ctx.mult) continue;
    options.push_back({3, [&, rf]() {
                         Label x = ctx.var_gen.fresh();
                         Label y = ctx.var_gen.fresh();
                         Goal p1{g.seq, g.fired};
                         p1.fired[rf]++;
                         Goal p2 = p1;
                         p1.seq.rhs.add({x, rf.formula.lhs()});
                         p2.seq.rhs.add({y, rf.formula.rhs()});
                         return close_goal(ctx, p1, [&](SymDerivation&& d1) {
                           SymDerivation first = std::move(d1);
                           return close_goal(ctx, p2, [&](SymDerivation&& d2) {
                             SymDerivation node{RuleId::StarR, g.seq, rf, {x, y}, {}, {}};
                             node.premises.push_back(first);
                             node.premises.push_back(std::move(d2));
                             return k(std::move(node));
                           });
                         });
                       }});
  }
  for (const LabelledFormula& lf : g.seq.lhs) {
    if (lf.formula.conn() != Conn::Wand) continue;
    auto it = g.fired.find(lf);
    if (it != g.fired.end() && it->second >= ctx.mult) continue;
    options.push_back({3, [&, lf]() {
                         Label x = ctx.var_gen.fresh();
                         Label z = ctx.var_gen.fresh();
                         Goal p1{g.seq, g.fired};
                         p1.fired[lf]++;
                         Goal p2 = p1;
                         p1.seq.rhs.add({x, lf.formula.lhs()});
                         p2.seq.lhs.add({z, lf.formula.rhs()});
                         return close_goal(ctx, p1, [&](SymDerivation&& d1) {
                           SymDerivation first = std::move(d1);
                           return close_goal(ctx, p2, [&](SymDerivation&& d2) {
                             SymDerivation node{RuleId::WandL, g.seq, lf, {x, z}, {}, {}};
                             node.premises.push_back(first);
                             node.premises.push_back(std::move(d2));
                             return k(std::move(node));
                           });
                         });
                       }});
  }

  std::stable_sort(options.begin(), options.end(),
                   [](const Option& a, const Option& b) { return a.rank < b.rank; });
  for (Option& o : options) {
    ctx.stats->closures++;
    if (o.run()) return true;
    ctx.tick();
  }
  return false;
}

void collect_sym_labels(const SymDerivation& d, std::set<Label>& out) {
  for (const Label& l : labels_of(d.sequent)) out.insert(l);
  for (const Label& l : d.labels) out.insert(l);
  for (const SymDerivation& p : d.premises) collect_sym_labels(p, out);
}

}  // namespace

SymSequent initial_sequent(const Formula& f) {
  SymSequent s;
  s.rhs.add({Label::world("a0"), f});
  return s;
}

std::vector<SymSequent> saturate(const SymSequent& s, LabelGen& gen, int* max_branch_steps) {
  for (const Label& l : labels_of(s)) gen.avoid(l);
  std::vector<SymSequent> out;
  std::vector<std::pair<SymSequent, int>> work{{s, 0}};
  int deepest = 0;
  while (!work.empty()) {
    auto [cur, depth] = std::move(work.back());
    work.pop_back();
    deepest = std::max(deepest, depth);
    auto ns = first_negative(cur, gen, {});
    if (!ns) {
      out.push_back(std::move(cur));
      continue;
    }
    deepest = std::max(deepest, depth + 1);
    if (ns->premises.empty()) continue;  // closed by botL or topR
    for (auto it = ns->premises.rbegin(); it != ns->premises.rend(); ++it)
      work.push_back({std::move(*it), depth + 1});
  }
  if (max_branch_steps) *max_branch_steps = deepest;
  return out;
}

// -------------------------------------------------------------------------
// Reconstruction

namespace {

struct PendingNode {
  RuleId rule;
  Sequent conclusion;
  RuleArgs args;
};

Sequent sym_to_ground(const SymSequent& s) {
  Sequent out;
  for (const RelAtom& a : s.rels) {
    if (!atom_ground(a)) throw ReconstructError("root sequent is not ground");
    out.rels.add(a);
  }
  for (const LabelledFormula& f : s.lhs) {
    if (f.label.is_var()) throw ReconstructError("root sequent is not ground");
    out.lhs.add(f);
  }
  for (const LabelledFormula& f : s.rhs) {
    if (f.label.is_var()) throw ReconstructError("root sequent is not ground");
    out.rhs.add(f);
  }
  return out;
}

struct Rebuilder {
  const ConstraintSystem& sys;
  const Solution& sol;
  std::map<std::string, const SolveStep*> step_by_origin;

  Label resolve(const Label& l, const Subst& theta) const {
    Label r = l;
    if (r.is_var()) {
      r = sol.theta(r);
      if (r.is_var()) throw ReconstructError("no assignment for free variable " + l.text());
    }
    return theta(r);
  }

  struct Chain {
    std::vector<PendingNode> nodes;
    Sequent cur;
    Subst theta;
  };

  void chain_push(Chain& ch, RuleId r, RuleArgs a) const {
    std::vector<Sequent> prs;
    try {
      prs = rule_premises(r, ch.cur, a);
    } catch (const RuleError& e) {
      throw ReconstructError(std::string("cannot splice ") + rule_name(r) + ": " + e.what());
    }
    if (prs.size() != 1) throw ReconstructError("spliced rule is not unary");
    ch.nodes.push_back({r, ch.cur, std::move(a)});
    ch.cur = std::move(prs[0]);
  }

  void splice(Chain& ch, const SigmaSeq& sigma) const {
    for (const StructStep& st : sigma) {
      switch (st.rule) {
        case RuleId::E: {
          RelAtom t = ch.theta(st.principal[0]);
          if (ch.cur.rels.contains({t.right, t.left, t.parent})) break;
          RuleArgs a;
          a.rels = {t};
          chain_push(ch, RuleId::E, std::move(a));
          break;
        }
        case RuleId::U: {
          Label x = ch.theta(st.produced[0].left);
          if (ch.cur.rels.contains({x, Label::eps(), x})) break;
          RuleArgs a;
          a.labels = {x};
          chain_push(ch, RuleId::U, std::move(a));
          break;
        }
        case RuleId::A: {
          RelAtom t1 = ch.theta(st.principal[0]);
          RelAtom t2 = ch.theta(st.principal[1]);
          RuleArgs a;
          a.labels = {st.introduced[0]};
          if (t1 == t2) {
            a.rels = {t1};
            chain_push(ch, RuleId::Ac, std::move(a));
          } else {
            a.rels = {t1, t2};
            chain_push(ch, RuleId::A, std::move(a));
          }
          break;
        }
        case RuleId::Ac: {
          RuleArgs a;
          a.rels = {ch.theta(st.principal[0])};
          a.labels = {st.introduced[0]};
          chain_push(ch, RuleId::Ac, std::move(a));
          break;
        }
        case RuleId::Eq1:
        case RuleId::Eq2: {
          RelAtom t = ch.theta(st.principal[0]);
          if (t.right == t.parent) break;
          bool eq1 = st.rule == RuleId::Eq1;
          if (eq1 && t.right.is_eps()) eq1 = false;
          if (!eq1 && t.parent.is_eps()) eq1 = true;
          RuleArgs a;
          a.rels = {t};
          if (eq1) {
            chain_push(ch, RuleId::Eq1, std::move(a));
            ch.theta = ch.theta.then(Subst::single(t.right, t.parent));
          } else {
            chain_push(ch, RuleId::Eq2, std::move(a));
            ch.theta = ch.theta.then(Subst::single(t.parent, t.right));
          }
          break;
        }
        case RuleId::T: {
          RuleArgs a;
          a.labels = {ch.theta(st.produced[0].left), ch.theta(st.produced[0].right),
                      st.introduced[0]};
          chain_push(ch, RuleId::T, std::move(a));
          break;
        }
        case RuleId::P: {
          RelAtom keep = ch.theta(st.principal[0]);
          RelAtom drop = ch.theta(st.principal[1]);
          if (keep == drop || keep.parent == drop.parent) break;
          if (drop.parent.is_eps()) std::swap(keep, drop);
          RuleArgs a;
          a.rels = {keep, drop};
          chain_push(ch, RuleId::P, std::move(a));
          ch.theta = ch.theta.then(Subst::single(drop.parent, keep.parent));
          break;
        }
        case RuleId::IU: {
          RelAtom t = ch.theta(st.principal[0]);
          if (t.left.is_eps() && t.right.is_eps()) break;
          RuleArgs a;
          a.rels = {t};
          chain_push(ch, RuleId::IU, std::move(a));
          Subst u;
          if (!t.left.is_eps()) u.bind(t.left, Label::eps());
          if (!t.right.is_eps()) u.bind(t.right, Label::eps());
          ch.theta = ch.theta.then(u);
          break;
        }
        case RuleId::C: {
          RelAtom keep = ch.theta(st.principal[0]);
          RelAtom drop = ch.theta(st.principal[1]);
          if (keep == drop || keep.right == drop.right) break;
          if (drop.right.is_eps()) std::swap(keep, drop);
          RuleArgs a;
          a.rels = {keep, drop};
          chain_push(ch, RuleId::C, std::move(a));
          ch.theta = ch.theta.then(Subst::single(drop.right, keep.right));
          break;
        }
        default:
          throw ReconstructError("unexpected rule inside a structural sequence");
      }
    }
  }

  // Replay every available label merge so that equal-by-entailment labels
  // become literally equal.
  void normalize(Chain& ch) const {
    for (;;) {
      std::optional<RelAtom> pick;
      for (const RelAtom& a : ch.cur.rels)
        if (a.left.is_eps() && a.right != a.parent) {
          pick = a;
          break;
        }
      if (!pick) return;
      RuleArgs a;
      a.rels = {*pick};
      if (pick->right.is_eps()) {
        chain_push(ch, RuleId::Eq2, std::move(a));
        ch.theta = ch.theta.then(Subst::single(pick->parent, pick->right));
      } else {
        chain_push(ch, RuleId::Eq1, std::move(a));
        ch.theta = ch.theta.then(Subst::single(pick->right, pick->parent));
      }
    }
  }

  Derivation wrap(std::vector<PendingNode>&& nodes, Derivation core) const {
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      Derivation d;
      d.rule = it->rule;
      d.conclusion = std::move(it->conclusion);
      d.args = std::move(it->args);
      d.premises.push_back(std::move(core));
      core = std::move(d);
    }
    return core;
  }

  const SolveStep* step_for(const std::vector<int>& path, RuleId rule) const {
    std::ostringstream os;
    for (int i : path) os << i << ".";
    os << rule_name(rule);
    auto it = step_by_origin.find(os.str());
    return it == step_by_origin.end() ? nullptr : it->second;
  }

  Derivation build(const SymDerivation& n, Sequent g, const Subst& theta,
                   std::vector<int>& path) const {
    switch (n.rule) {
      case RuleId::BotL:
      case RuleId::TopR: {
        RuleArgs a;
        a.principal = LabelledFormula{resolve(n.principal->label, theta), n.principal->formula};
        return Derivation{n.rule, std::move(g), std::move(a), {}};
      }

      case RuleId::Id: {
        const SolveStep* st = step_for(path, RuleId::Id);
        if (!st) throw ReconstructError("missing solver step for an id closure");
        Chain ch{{}, std::move(g), theta};
        splice(ch, st->sigma);
        normalize(ch);
        Label w1 = resolve(n.labels[0], ch.theta);
        Label w2 = resolve(n.labels[1], ch.theta);
        if (!(w1 == w2))
          throw ReconstructError("id labels still differ after merging: " + w1.text() + " vs " +
                                 w2.text());
        RuleArgs a;
        a.principal = LabelledFormula{w1, n.principal->formula};
        Derivation core{RuleId::Id, ch.cur, std::move(a), {}};
        return wrap(std::move(ch.nodes), std::move(core));
      }

      case RuleId::MEmpR: {
        const SolveStep* st = step_for(path, RuleId::MEmpR);
        if (!st) throw ReconstructError("missing solver step for a unit closure");
        Chain ch{{}, std::move(g), theta};
        splice(ch, st->sigma);
        normalize(ch);
        Label w = resolve(n.labels[0], ch.theta);
        if (!w.is_eps())
          throw ReconstructError("unit closure at a label not merged with eps: " + w.text());
        RuleArgs a;
        a.principal = LabelledFormula{Label::eps(), Formula::memp()};
        Derivation core{RuleId::MEmpR, ch.cur, std::move(a), {}};
        return wrap(std::move(ch.nodes), std::move(core));
      }

      case RuleId::StarR:
      case RuleId::WandL: {
        const SolveStep* st = step_for(path, n.rule);
        if (!st) throw ReconstructError("missing solver step for a positive rule");
        Chain ch{{}, std::move(g), theta};
        splice(ch, st->sigma);
        normalize(ch);
        Label w = resolve(n.principal->label, ch.theta);
        Label v0 = resolve(n.labels[0], ch.theta);
        Label v1 = resolve(n.labels[1], ch.theta);
        RelAtom atom = n.rule == RuleId::StarR ? RelAtom{v0, v1, w} : RelAtom{v0, w, v1};
        if (!ch.cur.rels.contains(atom))
          throw ReconstructError(std::string(rule_name(n.rule)) +
                                 ": principal atom absent after splicing: " + atom.text());
        RuleArgs a;
        a.principal = LabelledFormula{w, n.principal->formula};
        a.rels = {atom};
        std::vector<Sequent> prs = rule_premises(n.rule, ch.cur, a);
        Derivation core{n.rule, ch.cur, a, {}};
        for (size_t i = 0; i < prs.size(); i++) {
          path.push_back(static_cast<int>(i));
          core.premises.push_back(build(n.premises[i], std::move(prs[i]), ch.theta, path));
          path.pop_back();
        }
        return wrap(std::move(ch.nodes), std::move(core));
      }

      case RuleId::MEmpL: {
        Label w = resolve(n.principal->label, theta);
        Chain ch{{}, std::move(g), theta};
        if (!w.is_eps()) {
          RuleArgs a;
          a.principal = LabelledFormula{w, Formula::memp()};
          chain_push(ch, RuleId::MEmpL, std::move(a));
          ch.theta = ch.theta.then(Subst::single(w, Label::eps()));
        }
        if (!ch.cur.rels.contains({Label::eps(), Label::eps(), Label::eps()})) {
          RuleArgs a;
          a.labels = {Label::eps()};
          chain_push(ch, RuleId::U, std::move(a));
        }
        path.push_back(0);
        Derivation child = build(n.premises[0], ch.cur, ch.theta, path);
        path.pop_back();
        return wrap(std::move(ch.nodes), std::move(child));
      }

      case RuleId::P:
      case RuleId::IU:
      case RuleId::C: {
        Chain ch{{}, std::move(g), theta};
        SigmaSeq one;
        if (n.rule == RuleId::P) one.push_back(step_p(n.rels[0], n.rels[1]));
        if (n.rule == RuleId::IU) one.push_back(step_iu(n.rels[0]));
        if (n.rule == RuleId::C) one.push_back(step_c(n.rels[0], n.rels[1]));
        splice(ch, one);
        path.push_back(0);
        Derivation child = build(n.premises[0], ch.cur, ch.theta, path);
        path.pop_back();
        return wrap(std::move(ch.nodes), std::move(child));
      }

      default: {  // the remaining logical rules
        RuleArgs a;
        a.principal = LabelledFormula{resolve(n.principal->label, theta), n.principal->formula};
        if (n.rule == RuleId::StarL || n.rule == RuleId::WandR) {
          for (const Label& l : n.labels)
            if (!(theta(l) == l))
              throw ReconstructError("fresh label captured by a merge: " + l.text());
          a.labels = n.labels;
        }
        std::vector<Sequent> prs;
        try {
          prs = rule_premises(n.rule, g, a);
        } catch (const RuleError& e) {
          throw ReconstructError(std::string("grounding ") + rule_name(n.rule) + ": " + e.what());
        }
        if (prs.size() != n.premises.size())
          throw ReconstructError("premise count mismatch during grounding");
        Derivation core{n.rule, std::move(g), std::move(a), {}};
        for (size_t i = 0; i < prs.size(); i++) {
          path.push_back(static_cast<int>(i));
          core.premises.push_back(build(n.premises[i], std::move(prs[i]), theta, path));
          path.pop_back();
        }
        return core;
      }
    }
  }
};

}  // namespace

Derivation reconstruct(const SymDerivation& d, const ConstraintSystem& sys, const Solution& sol) {
  Rebuilder rb{sys, sol, {}};
  for (const SolveStep& st : sol.steps)
    rb.step_by_origin[sys.get(st.constraint).origin] = &st;
  Sequent root = sym_to_ground(d.sequent);
  std::vector<int> path;
  return rb.build(d, std::move(root), Subst{}, path);
}

// -------------------------------------------------------------------------
// Top-level search

Outcome prove(const Formula& f, const SearchOptions& opts) {
  auto t0 = Clock::now();
  SearchStats stats;
  std::optional<ProvedData> data;
  auto deadline = t0 + std::chrono::milliseconds(opts.timeout_ms);

  RBudget rb = opts.r_budget;
  rb.extras = opts.extras;

  for (int m = 1; m <= std::max(1, opts.multiplicity); m++) {
    Ctx ctx{opts, m, deadline, LabelGen("a"), LabelGen("x", Label::Kind::Var), &stats};
    Label root = ctx.world_gen.fresh();
    Goal goal;
    goal.seq.rhs.add({root, f});
    try {
      bool ok = close_goal(ctx, goal, [&](SymDerivation&& d) -> bool {
        stats.solves++;
        ConstraintSystem sys = collect(d);
        auto wf = well_formed(sys);
        if (!wf.ok)
          throw std::logic_error("collected constraint system is ill-formed: " + wf.violation);
        LabelGen sgen("w");
        std::set<Label> all;
        collect_sym_labels(d, all);
        for (const Label& l : all) sgen.avoid(l);
        SolveBudget sb{rb, opts.max_candidates, opts.max_solver_backtracks, deadline, true};
        SolveStats ss;
        auto sol = solve(sys, sb, sgen, &ss);
        stats.solve_candidates += ss.candidates_tried;
        if (!sol) return false;
        Derivation ground = reconstruct(d, sys, *sol);
        CheckReport rep = check(ground, {false, opts.extras});
        if (!rep.accepted)
          throw ReconstructError("reconstructed derivation rejected: " + rep.message);
        data = ProvedData{std::move(d), std::move(sys), std::move(*sol), std::move(ground)};
        return true;
      });
      if (ok) {
        stats.multiplicity_used = m;
        break;
      }
    } catch (const TimeoutSignal&) {
      stats.timed_out = true;
      break;
    } catch (const SolveTimeout&) {
      stats.timed_out = true;
      break;
    }
  }

  stats.wall_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - t0)
          .count();
  Outcome out;
  out.proved = data.has_value();
  out.data = std::move(data);
  out.stats = stats;
  return out;
}

}  // namespace bbi
