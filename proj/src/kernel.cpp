#include "bbi/kernel.hpp"

#include <sstream>

namespace bbi {

std::string to_string(const Sequent& s) {
  std::ostringstream os;
  bool first = true;
  for (const RelAtom& a : s.rels) {
    if (!first) os << "; ";
    os << a.text();
    first = false;
  }
  for (const LabelledFormula& f : s.lhs) {
    if (!first) os << "; ";
    os << f.label.text() << ":" << to_string(f.formula);
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

const char* rule_name(RuleId r) {
  switch (r) {
    case RuleId::Id: return "id";
    case RuleId::Cut: return "cut";
    case RuleId::BotL: return "botL";
    case RuleId::TopR: return "topR";
    case RuleId::MEmpL: return "mempL";
    case RuleId::MEmpR: return "mempR";
    case RuleId::AndL: return "andL";
    case RuleId::AndR: return "andR";
    case RuleId::ImpL: return "impL";
    case RuleId::ImpR: return "impR";
    case RuleId::NotL: return "notL";
    case RuleId::NotR: return "notR";
    case RuleId::OrL: return "orL";
    case RuleId::OrR: return "orR";
    case RuleId::StarL: return "starL";
    case RuleId::StarR: return "starR";
    case RuleId::WandL: return "wandL";
    case RuleId::WandR: return "wandR";
    case RuleId::E: return "E";
    case RuleId::A: return "A";
    case RuleId::U: return "U";
    case RuleId::Ac: return "Ac";
    case RuleId::Eq1: return "Eq1";
    case RuleId::Eq2: return "Eq2";
    case RuleId::P: return "P";
    case RuleId::T: return "T";
    case RuleId::IU: return "IU";
    case RuleId::C: return "C";
  }
  return "?";
}

std::optional<RuleId> rule_from_name(const std::string& n) {
  static const std::map<std::string, RuleId> table = [] {
    std::map<std::string, RuleId> t;
    for (int i = 0; i <= static_cast<int>(RuleId::C); i++) {
      RuleId r = static_cast<RuleId>(i);
      t[rule_name(r)] = r;
    }
    return t;
  }();
  auto it = table.find(n);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

bool is_zero_premise(RuleId r) {
  return r == RuleId::Id || r == RuleId::BotL || r == RuleId::TopR || r == RuleId::MEmpR;
}

bool is_structural(RuleId r) {
  switch (r) {
    case RuleId::E:
    case RuleId::A:
    case RuleId::U:
    case RuleId::Ac:
    case RuleId::Eq1:
    case RuleId::Eq2:
    case RuleId::P:
    case RuleId::T:
    case RuleId::IU:
    case RuleId::C:
      return true;
    default:
      return false;
  }
}

bool is_extra_structural(RuleId r) {
  return r == RuleId::P || r == RuleId::T || r == RuleId::IU || r == RuleId::C;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw RuleError(msg); }

const LabelledFormula& need_principal(const RuleArgs& args, const char* rule) {
  if (!args.principal) fail(std::string(rule) + ": missing principal formula");
  return *args.principal;
}

void need_in_lhs(const Sequent& s, const LabelledFormula& f, const char* rule) {
  if (!s.lhs.contains(f))
    fail(std::string(rule) + ": principal occurrence " + f.label.text() + ":" +
         to_string(f.formula) + " not on the left of the conclusion");
}

void need_in_rhs(const Sequent& s, const LabelledFormula& f, const char* rule) {
  if (!s.rhs.contains(f))
    fail(std::string(rule) + ": principal occurrence " + f.label.text() + ":" +
         to_string(f.formula) + " not on the right of the conclusion");
}

void need_rel(const Sequent& s, const RelAtom& a, const char* rule) {
  if (!s.rels.contains(a))
    fail(std::string(rule) + ": principal relational atom " + a.text() + " absent");
}

void need_conn(const LabelledFormula& f, Conn c, const char* rule) {
  if (f.formula.conn() != c)
    fail(std::string(rule) + ": principal formula " + to_string(f.formula) + " has the wrong shape");
}

Label need_fresh(const Sequent& conc, const std::vector<Label>& labels, size_t i, const char* rule) {
  if (labels.size() <= i) fail(std::string(rule) + ": missing fresh-label parameter");
  const Label& l = labels[i];
  if (!l.is_world()) fail(std::string(rule) + ": fresh label must be a world label");
  if (labels_of(conc).count(l))
    fail(std::string(rule) + ": label " + l.text() + " is not fresh in the conclusion");
  return l;
}

Sequent without_lhs(Sequent s, const LabelledFormula& f) {
  s.lhs.remove_one(f);
  return s;
}

Sequent without_rhs(Sequent s, const LabelledFormula& f) {
  s.rhs.remove_one(f);
  return s;
}

}  // namespace

std::vector<Sequent> rule_premises(RuleId rule, const Sequent& conc, const RuleArgs& args) {
  switch (rule) {
    case RuleId::Id: {
      const LabelledFormula& p = need_principal(args, "id");
      if (!p.formula.is_atom()) fail("id: only atomic propositions may close a branch");
      need_in_lhs(conc, p, "id");
      need_in_rhs(conc, p, "id");
      return {};
    }

    case RuleId::BotL: {
      const LabelledFormula& p = need_principal(args, "botL");
      need_conn(p, Conn::Bot, "botL");
      need_in_lhs(conc, p, "botL");
      return {};
    }

    case RuleId::TopR: {
      const LabelledFormula& p = need_principal(args, "topR");
      need_conn(p, Conn::Top, "topR");
      need_in_rhs(conc, p, "topR");
      return {};
    }

    case RuleId::MEmpR: {
      LabelledFormula p{Label::eps(), Formula::memp()};
      if (args.principal) p = *args.principal;
      need_conn(p, Conn::MEmp, "mempR");
      if (!p.label.is_eps()) fail("mempR: the unit closes only at label eps");
      need_in_rhs(conc, p, "mempR");
      return {};
    }

    case RuleId::MEmpL: {
      const LabelledFormula& p = need_principal(args, "mempL");
      need_conn(p, Conn::MEmp, "mempL");
      need_in_lhs(conc, p, "mempL");
      if (p.label.is_eps()) fail("mempL: side condition w != eps violated");
      return {substitute(without_lhs(conc, p), Subst::single(p.label, Label::eps()))};
    }

    case RuleId::AndL: {
      const LabelledFormula& p = need_principal(args, "andL");
      need_conn(p, Conn::And, "andL");
      need_in_lhs(conc, p, "andL");
      Sequent pr = without_lhs(conc, p);
      pr.lhs.add({p.label, p.formula.lhs()});
      pr.lhs.add({p.label, p.formula.rhs()});
      return {pr};
    }

    case RuleId::AndR: {
      const LabelledFormula& p = need_principal(args, "andR");
      need_conn(p, Conn::And, "andR");
      need_in_rhs(conc, p, "andR");
      Sequent base = without_rhs(conc, p);
      Sequent p1 = base, p2 = base;
      p1.rhs.add({p.label, p.formula.lhs()});
      p2.rhs.add({p.label, p.formula.rhs()});
      return {p1, p2};
    }

    case RuleId::OrL: {
      const LabelledFormula& p = need_principal(args, "orL");
      need_conn(p, Conn::Or, "orL");
      need_in_lhs(conc, p, "orL");
      Sequent base = without_lhs(conc, p);
      Sequent p1 = base, p2 = base;
      p1.lhs.add({p.label, p.formula.lhs()});
      p2.lhs.add({p.label, p.formula.rhs()});
      return {p1, p2};
    }

    case RuleId::OrR: {
      const LabelledFormula& p = need_principal(args, "orR");
      need_conn(p, Conn::Or, "orR");
      need_in_rhs(conc, p, "orR");
      Sequent pr = without_rhs(conc, p);
      pr.rhs.add({p.label, p.formula.lhs()});
      pr.rhs.add({p.label, p.formula.rhs()});
      return {pr};
    }

    case RuleId::ImpL: {
      const LabelledFormula& p = need_principal(args, "impL");
      need_conn(p, Conn::Imp, "impL");
      need_in_lhs(conc, p, "impL");
      Sequent base = without_lhs(conc, p);
      Sequent p1 = base, p2 = base;
      p1.rhs.add({p.label, p.formula.lhs()});
      p2.lhs.add({p.label, p.formula.rhs()});
      return {p1, p2};
    }

    case RuleId::ImpR: {
      const LabelledFormula& p = need_principal(args, "impR");
      need_conn(p, Conn::Imp, "impR");
      need_in_rhs(conc, p, "impR");
      Sequent pr = without_rhs(conc, p);
      pr.lhs.add({p.label, p.formula.lhs()});
      pr.rhs.add({p.label, p.formula.rhs()});
      return {pr};
    }

    case RuleId::NotL: {
      const LabelledFormula& p = need_principal(args, "notL");
      need_conn(p, Conn::Not, "notL");
      need_in_lhs(conc, p, "notL");
      Sequent pr = without_lhs(conc, p);
      pr.rhs.add({p.label, p.formula.sub()});
      return {pr};
    }

    case RuleId::NotR: {
      const LabelledFormula& p = need_principal(args, "notR");
      need_conn(p, Conn::Not, "notR");
      need_in_rhs(conc, p, "notR");
      Sequent pr = without_rhs(conc, p);
      pr.lhs.add({p.label, p.formula.sub()});
      return {pr};
    }

    case RuleId::StarL: {
      const LabelledFormula& p = need_principal(args, "starL");
      need_conn(p, Conn::Star, "starL");
      need_in_lhs(conc, p, "starL");
      Label x = need_fresh(conc, args.labels, 0, "starL");
      Label y = need_fresh(conc, args.labels, 1, "starL");
      if (x == y) fail("starL: the two introduced labels must differ");
      Sequent pr = without_lhs(conc, p);
      pr.rels.add({x, y, p.label});
      pr.lhs.add({x, p.formula.lhs()});
      pr.lhs.add({y, p.formula.rhs()});
      return {pr};
    }

    case RuleId::StarR: {
      const LabelledFormula& p = need_principal(args, "starR");
      need_conn(p, Conn::Star, "starR");
      need_in_rhs(conc, p, "starR");
      if (args.rels.size() != 1) fail("starR: expected one principal relational atom");
      const RelAtom& a = args.rels[0];
      need_rel(conc, a, "starR");
      if (a.parent != p.label) fail("starR: relational atom does not decompose the principal label");
      Sequent p1 = conc, p2 = conc;  // principal retained
      p1.rhs.add({a.left, p.formula.lhs()});
      p2.rhs.add({a.right, p.formula.rhs()});
      return {p1, p2};
    }

    case RuleId::WandL: {
      const LabelledFormula& p = need_principal(args, "wandL");
      need_conn(p, Conn::Wand, "wandL");
      need_in_lhs(conc, p, "wandL");
      if (args.rels.size() != 1) fail("wandL: expected one principal relational atom");
      const RelAtom& a = args.rels[0];
      need_rel(conc, a, "wandL");
      if (a.right != p.label) fail("wandL: relational atom does not extend the principal label");
      Sequent p1 = conc, p2 = conc;  // principal retained
      p1.rhs.add({a.left, p.formula.lhs()});
      p2.lhs.add({a.parent, p.formula.rhs()});
      return {p1, p2};
    }

    case RuleId::WandR: {
      const LabelledFormula& p = need_principal(args, "wandR");
      need_conn(p, Conn::Wand, "wandR");
      need_in_rhs(conc, p, "wandR");
      Label x = need_fresh(conc, args.labels, 0, "wandR");
      Label z = need_fresh(conc, args.labels, 1, "wandR");
      if (x == z) fail("wandR: the two introduced labels must differ");
      Sequent pr = without_rhs(conc, p);
      pr.rels.add({x, p.label, z});
      pr.lhs.add({x, p.formula.lhs()});
      pr.rhs.add({z, p.formula.rhs()});
      return {pr};
    }

    case RuleId::E: {
      if (args.rels.size() != 1) fail("E: expected one principal relational atom");
      const RelAtom& a = args.rels[0];
      need_rel(conc, a, "E");
      Sequent pr = conc;
      pr.rels.add({a.right, a.left, a.parent});
      return {pr};
    }

    case RuleId::A: {
      if (args.rels.size() != 2) fail("A: expected two principal relational atoms");
      const RelAtom& t1 = args.rels[0];
      const RelAtom& t2 = args.rels[1];
      if (t2.parent != t1.left) fail("A: atoms do not chain (second parent must be first left child)");
      if (t1 == t2) {
        if (conc.rels.count(t1) < 2) fail("A: identical principal atoms need two occurrences (use Ac)");
      } else {
        need_rel(conc, t1, "A");
        need_rel(conc, t2, "A");
      }
      Label w = need_fresh(conc, args.labels, 0, "A");
      Sequent pr = conc;
      pr.rels.add({t2.left, w, t1.parent});
      pr.rels.add({t1.right, t2.right, w});
      return {pr};
    }

    case RuleId::Ac: {
      if (args.rels.size() != 1) fail("Ac: expected one principal relational atom");
      const RelAtom& t = args.rels[0];
      need_rel(conc, t, "Ac");
      if (t.left != t.parent) fail("Ac: principal atom must have the shape (x,y |> x)");
      Label w = need_fresh(conc, args.labels, 0, "Ac");
      Sequent pr = conc;
      pr.rels.add({t.left, w, t.left});
      pr.rels.add({t.right, t.right, w});
      return {pr};
    }

    case RuleId::U: {
      if (args.labels.size() != 1) fail("U: expected one label parameter");
      const Label& x = args.labels[0];
      if (!x.is_eps() && !labels_of(conc).count(x))
        fail("U: label " + x.text() + " does not occur in the conclusion");
      Sequent pr = conc;
      pr.rels.add({x, Label::eps(), x});
      return {pr};
    }

    case RuleId::Eq1: {
      if (args.rels.size() != 1) fail("Eq1: expected one principal relational atom");
      const RelAtom& a = args.rels[0];
      need_rel(conc, a, "Eq1");
      if (!a.left.is_eps()) fail("Eq1: principal atom must have the shape (eps,w |> w')");
      if (a.right.is_eps()) fail("Eq1: side condition w != eps violated");
      return {substitute(conc, Subst::single(a.right, a.parent))};
    }

    case RuleId::Eq2: {
      if (args.rels.size() != 1) fail("Eq2: expected one principal relational atom");
      const RelAtom& a = args.rels[0];
      need_rel(conc, a, "Eq2");
      if (!a.left.is_eps()) fail("Eq2: principal atom must have the shape (eps,w' |> w)");
      if (a.parent.is_eps()) fail("Eq2: side condition w != eps violated");
      return {substitute(conc, Subst::single(a.parent, a.right))};
    }

    case RuleId::P: {
      if (args.rels.size() != 2) fail("P: expected two principal relational atoms");
      const RelAtom& keep = args.rels[0];
      const RelAtom& drop = args.rels[1];
      need_rel(conc, keep, "P");
      need_rel(conc, drop, "P");
      if (keep.left != drop.left || keep.right != drop.right)
        fail("P: principal atoms must share both children");
      if (keep.parent == drop.parent) fail("P: principal atoms must have distinct parents");
      if (drop.parent.is_eps()) fail("P: side condition forbids substituting eps away");
      Sequent pr = conc;
      pr.rels.remove_one(drop);
      return {substitute(pr, Subst::single(drop.parent, keep.parent))};
    }

    case RuleId::T: {
      if (args.labels.size() != 3) fail("T: expected labels a, b and a fresh c");
      const Label& a = args.labels[0];
      const Label& b = args.labels[1];
      auto present = labels_of(conc);
      if (!a.is_eps() && !present.count(a)) fail("T: label " + a.text() + " does not occur");
      if (!b.is_eps() && !present.count(b)) fail("T: label " + b.text() + " does not occur");
      Label c = need_fresh(conc, args.labels, 2, "T");
      Sequent pr = conc;
      pr.rels.add({a, b, c});
      return {pr};
    }

    case RuleId::IU: {
      if (args.rels.size() != 1) fail("IU: expected one principal relational atom");
      const RelAtom& t = args.rels[0];
      need_rel(conc, t, "IU");
      if (!t.parent.is_eps()) fail("IU: principal atom must have the shape (a,b |> eps)");
      Subst th;
      if (!t.left.is_eps()) th.bind(t.left, Label::eps());
      if (!t.right.is_eps()) th.bind(t.right, Label::eps());
      return {substitute(conc, th)};
    }

    case RuleId::C: {
      if (args.rels.size() != 2) fail("C: expected two principal relational atoms");
      const RelAtom& keep = args.rels[0];
      const RelAtom& drop = args.rels[1];
      need_rel(conc, keep, "C");
      need_rel(conc, drop, "C");
      if (keep.left != drop.left || keep.parent != drop.parent)
        fail("C: principal atoms must share the left child and the parent");
      if (keep.right == drop.right) fail("C: principal atoms must have distinct right children");
      if (drop.right.is_eps()) fail("C: side condition forbids substituting eps away");
      Sequent pr = conc;
      pr.rels.remove_one(drop);
      return {substitute(pr, Subst::single(drop.right, keep.right))};
    }

    case RuleId::Cut: {
      if (!args.cut_label || !args.cut_formula || !args.cut_first)
        fail("cut: missing cut formula or split");
      const Sequent& first = *args.cut_first;
      if (!first.rels.subset_of(conc.rels) || !first.lhs.subset_of(conc.lhs) ||
          !first.rhs.subset_of(conc.rhs))
        fail("cut: split is not part of the conclusion");
      LabelledFormula cutf{*args.cut_label, *args.cut_formula};
      Sequent p1 = first;
      p1.rhs.add(cutf);
      Sequent p2;
      p2.rels = conc.rels.minus(first.rels);
      p2.lhs = conc.lhs.minus(first.lhs);
      p2.rhs = conc.rhs.minus(first.rhs);
      p2.lhs.add(cutf);
      return {p1, p2};
    }
  }
  fail("unknown rule");
}

namespace {

bool args_ground(const RuleArgs& a) {
  auto lbl_ok = [](const Label& l) { return !l.is_var(); };
  for (const Label& l : a.labels)
    if (!lbl_ok(l)) return false;
  for (const RelAtom& r : a.rels)
    if (!lbl_ok(r.left) || !lbl_ok(r.right) || !lbl_ok(r.parent)) return false;
  if (a.principal && !lbl_ok(a.principal->label)) return false;
  if (a.cut_label && !lbl_ok(*a.cut_label)) return false;
  if (a.cut_first && !is_ground(*a.cut_first)) return false;
  return true;
}

struct Checker {
  const CheckOptions& opts;
  CheckReport rep;

  bool reject(const std::vector<int>& path, const std::string& msg) {
    rep.accepted = false;
    rep.message = msg;
    rep.path = path;
    return false;
  }

  bool walk(const Derivation& d, std::vector<int>& path) {
    rep.rule_counts[d.rule]++;
    if (d.rule == RuleId::Cut) {
      rep.cut_count++;
      if (!opts.allow_cut) return reject(path, "cut rule used but not allowed");
    }
    if (is_extra_structural(d.rule) && !opts.extras.count(d.rule))
      return reject(path, std::string("rule ") + rule_name(d.rule) + " is not enabled");
    if (!is_ground(d.conclusion) || !args_ground(d.args))
      return reject(path, "free variable in a ground derivation");

    std::vector<Sequent> want;
    try {
      want = rule_premises(d.rule, d.conclusion, d.args);
    } catch (const RuleError& e) {
      return reject(path, e.what());
    }
    if (want.size() != d.premises.size())
      return reject(path, std::string(rule_name(d.rule)) + ": expected " +
                              std::to_string(want.size()) + " premises, found " +
                              std::to_string(d.premises.size()));
    for (size_t i = 0; i < want.size(); i++) {
      if (!(d.premises[i].conclusion == want[i])) {
        path.push_back(static_cast<int>(i));
        bool r = reject(path, std::string(rule_name(d.rule)) + ": premise " + std::to_string(i) +
                                  " does not match the schema; expected " + to_string(want[i]) +
                                  " but found " + to_string(d.premises[i].conclusion));
        path.pop_back();
        return r;
      }
    }
    for (size_t i = 0; i < d.premises.size(); i++) {
      path.push_back(static_cast<int>(i));
      bool ok = walk(d.premises[i], path);
      path.pop_back();
      if (!ok) return false;
    }
    return true;
  }
};

}  // namespace

CheckReport check(const Derivation& d, const CheckOptions& opts) {
  Checker c{opts, {}};
  std::vector<int> path;
  c.rep.accepted = c.walk(d, path);
  if (c.rep.accepted) c.rep.message = "accepted";
  return c.rep;
}

}  // namespace bbi
