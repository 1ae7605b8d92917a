#pragma once

#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bbi {

/// A label: the constant eps, a world label, or a free variable.
/// Worlds and free variables live in disjoint namespaces; only symbolic
/// sequents may carry free variables.
class Label {
 public:
  enum class Kind { Eps, World, Var };

  Label() = default;  // eps
  static Label eps() { return Label(); }
  static Label world(std::string n) { return Label(Kind::World, std::move(n)); }
  static Label var(std::string n) { return Label(Kind::Var, std::move(n)); }

  Kind kind() const { return kind_; }
  bool is_eps() const { return kind_ == Kind::Eps; }
  bool is_world() const { return kind_ == Kind::World; }
  bool is_var() const { return kind_ == Kind::Var; }
  const std::string& name() const { return name_; }

  std::string text() const {
    switch (kind_) {
      case Kind::Eps: return "eps";
      case Kind::World: return name_;
      case Kind::Var: return "?" + name_;
    }
    return "?";
  }

  friend auto operator<=>(const Label&, const Label&) = default;

 private:
  Label(Kind k, std::string n) : kind_(k), name_(std::move(n)) {}
  Kind kind_ = Kind::Eps;
  std::string name_;
};

/// (left, right |> parent): parent decomposes into left and right.
struct RelAtom {
  Label left, right, parent;
  friend auto operator<=>(const RelAtom&, const RelAtom&) = default;
  std::string text() const {
    return "(" + left.text() + "," + right.text() + " |> " + parent.text() + ")";
  }
};

/// A finite label-to-label map; eps is never in the domain.
class Subst {
 public:
  Subst() = default;
  static Subst single(const Label& from, const Label& to) {
    Subst s;
    s.bind(from, to);
    return s;
  }

  void bind(const Label& from, const Label& to) {
    if (from.is_eps()) throw std::invalid_argument("substitution with eps in its domain");
    if (from == to) return;
    map_[from] = to;
  }

  bool empty() const { return map_.empty(); }
  bool identity() const { return map_.empty(); }

  Label operator()(const Label& l) const {
    auto it = map_.find(l);
    return it == map_.end() ? l : it->second;
  }
  RelAtom operator()(const RelAtom& a) const {
    return {(*this)(a.left), (*this)(a.right), (*this)(a.parent)};
  }

  /// Composition: applying the result equals applying *this, then `later`.
  Subst then(const Subst& later) const {
    Subst out;
    for (const auto& [k, v] : map_) {
      Label img = later(v);
      if (img != k) out.map_[k] = img;
    }
    for (const auto& [k, v] : later.map_)
      if (!map_.count(k) && k != v) out.map_.emplace(k, v);
    return out;
  }

  const std::map<Label, Label>& mapping() const { return map_; }

  friend bool operator==(const Subst&, const Subst&) = default;

 private:
  std::map<Label, Label> map_;
};

/// Deterministic fresh world label: the first of w0, w1, ... not in ctx.
Label fresh_label(const std::set<Label>& ctx);

/// Stateful fresh-label supply. Confined to one task; not shared across threads.
class LabelGen {
 public:
  explicit LabelGen(std::string prefix = "w", Label::Kind kind = Label::Kind::World)
      : prefix_(std::move(prefix)), kind_(kind) {}

  void avoid(const Label& l) { used_.insert(l.name()); }
  template <typename It>
  void avoid_all(It begin, It end) {
    for (auto it = begin; it != end; ++it) avoid(*it);
  }

  Label fresh() {
    for (;;) {
      std::string name = prefix_ + std::to_string(next_++);
      if (used_.insert(name).second)
        return kind_ == Label::Kind::World ? Label::world(name) : Label::var(name);
    }
  }

 private:
  std::string prefix_;
  Label::Kind kind_;
  long next_ = 0;
  std::set<std::string> used_;
};

inline Label fresh_label(const std::set<Label>& ctx) {
  for (long i = 0;; i++) {
    Label cand = Label::world("w" + std::to_string(i));
    if (!ctx.count(cand)) return cand;
  }
}

}  // namespace bbi
