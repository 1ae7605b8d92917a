#pragma once

#include <compare>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bbi {

enum class Conn { Atom, Top, Bot, MEmp, Not, And, Or, Imp, Star, Wand };

inline bool is_binary(Conn c) {
  return c == Conn::And || c == Conn::Or || c == Conn::Imp || c == Conn::Star || c == Conn::Wand;
}

/// Immutable BBI formula. Copies share structure; all operations are pure.
class Formula {
 public:
  static Formula atom(std::string name);
  static Formula top();
  static Formula bot();
  static Formula memp();
  static Formula neg(Formula a);
  static Formula conj(Formula a, Formula b);
  static Formula disj(Formula a, Formula b);
  static Formula impl(Formula a, Formula b);
  static Formula star(Formula a, Formula b);
  static Formula wand(Formula a, Formula b);

  Conn conn() const { return n_->conn; }
  bool is_atom() const { return n_->conn == Conn::Atom; }
  const std::string& atom_name() const;
  Formula sub() const;  // operand of Not
  Formula lhs() const;  // left operand of a binary connective
  Formula rhs() const;

  /// Number of connectives.
  int connective_count() const { return n_->size; }

  int compare(const Formula& o) const;
  friend bool operator==(const Formula& a, const Formula& b) { return a.compare(b) == 0; }
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
    int c = a.compare(b);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  struct Node {
    Conn conn;
    std::string name;
    std::shared_ptr<const Node> a, b;
    int size = 0;
  };
  explicit Formula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

/// Parse the ASCII concrete syntax. Tokens: T, F, T* (alias emp), ~, &, |, ->, *, -*.
/// Precedence, tightest first: ~, *, &, |, -*, ->; binaries associate to the right.
Formula parse_formula(std::string_view text);

/// Inverse of parse_formula up to whitespace; emits minimal parentheses.
std::string to_string(const Formula& f);

/// Atom names occurring in f, sorted, without duplicates.
std::vector<std::string> atoms_of(const Formula& f);

struct SuiteEntry {
  int line;
  std::string text;
  Formula formula;
};

/// Suite file format: one formula per line, '#' starts a comment, blank lines ignored.
std::vector<SuiteEntry> parse_suite(std::string_view contents);

}  // namespace bbi
