#pragma once

#include <algorithm>
#include <initializer_list>
#include <vector>

#include "bbi/formula.hpp"
#include "bbi/label.hpp"

namespace bbi {

/// Order-insensitive multiset kept as a sorted vector.
template <typename T>
class Multiset {
 public:
  Multiset() = default;
  Multiset(std::initializer_list<T> xs) {
    for (const T& x : xs) add(x);
  }

  void add(const T& v) { items_.insert(std::upper_bound(items_.begin(), items_.end(), v), v); }

  bool remove_one(const T& v) {
    auto it = std::lower_bound(items_.begin(), items_.end(), v);
    if (it == items_.end() || !(*it == v)) return false;
    items_.erase(it);
    return true;
  }

  size_t count(const T& v) const {
    auto [lo, hi] = std::equal_range(items_.begin(), items_.end(), v);
    return static_cast<size_t>(hi - lo);
  }
  bool contains(const T& v) const { return count(v) > 0; }

  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<T>& items() const { return items_; }

  /// True when every element of this occurs in `other` at least as often.
  bool subset_of(const Multiset& other) const {
    for (size_t i = 0; i < items_.size();) {
      size_t j = i;
      while (j < items_.size() && items_[j] == items_[i]) j++;
      if (other.count(items_[i]) < j - i) return false;
      i = j;
    }
    return true;
  }

  Multiset minus(const Multiset& other) const {
    Multiset out = *this;
    for (const T& v : other) out.remove_one(v);
    return out;
  }

  friend bool operator==(const Multiset&, const Multiset&) = default;

 private:
  std::vector<T> items_;
};

struct LabelledFormula {
  Label label;
  Formula formula;
  friend auto operator<=>(const LabelledFormula&, const LabelledFormula&) = default;
};

/// Relational atoms and labelled formulae on the left, labelled formulae on
/// the right. Ground sequents carry no free variables.
struct Sequent {
  Multiset<RelAtom> rels;
  Multiset<LabelledFormula> lhs;
  Multiset<LabelledFormula> rhs;
  friend bool operator==(const Sequent&, const Sequent&) = default;
};

inline Sequent substitute(const Sequent& s, const Subst& th) {
  Sequent out;
  for (const RelAtom& a : s.rels) out.rels.add(th(a));
  for (const LabelledFormula& f : s.lhs) out.lhs.add({th(f.label), f.formula});
  for (const LabelledFormula& f : s.rhs) out.rhs.add({th(f.label), f.formula});
  return out;
}

inline void collect_labels(const Sequent& s, std::set<Label>& out) {
  for (const RelAtom& a : s.rels) {
    out.insert(a.left);
    out.insert(a.right);
    out.insert(a.parent);
  }
  for (const LabelledFormula& f : s.lhs) out.insert(f.label);
  for (const LabelledFormula& f : s.rhs) out.insert(f.label);
}

inline std::set<Label> labels_of(const Sequent& s) {
  std::set<Label> out;
  collect_labels(s, out);
  return out;
}

inline bool is_ground(const Sequent& s) {
  for (const Label& l : labels_of(s))
    if (l.is_var()) return false;
  return true;
}

std::string to_string(const Sequent& s);

}  // namespace bbi
