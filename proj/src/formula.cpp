#include "bbi/formula.hpp"

#include <cctype>
#include <set>

namespace bbi {

namespace {

const std::set<std::string, std::less<>> kReserved = {"T", "F", "emp"};

bool valid_atom_name(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return !kReserved.count(s);
}

}  // namespace

Formula Formula::atom(std::string name) {
  if (!valid_atom_name(name))
    throw std::invalid_argument("invalid or reserved atom name: '" + name + "'");
  auto n = std::make_shared<Node>();
  n->conn = Conn::Atom;
  n->name = std::move(name);
  n->size = 0;
  return Formula(std::move(n));
}

Formula Formula::top() {
  static const Formula f{[] {
    auto n = std::make_shared<Node>();
    n->conn = Conn::Top;
    return n;
  }()};
  return f;
}

Formula Formula::bot() {
  static const Formula f{[] {
    auto n = std::make_shared<Node>();
    n->conn = Conn::Bot;
    return n;
  }()};
  return f;
}

Formula Formula::memp() {
  static const Formula f{[] {
    auto n = std::make_shared<Node>();
    n->conn = Conn::MEmp;
    return n;
  }()};
  return f;
}

Formula Formula::neg(Formula a) {
  auto n = std::make_shared<Node>();
  n->conn = Conn::Not;
  n->a = a.n_;
  n->size = a.connective_count() + 1;
  return Formula(std::move(n));
}

namespace {
// binary factories share this shape; kept as a macro-free local template
}

#define BBI_BIN_FACTORY(fn, kind)                                  \
  Formula Formula::fn(Formula a, Formula b) {                      \
    auto n = std::make_shared<Node>();                             \
    n->conn = kind;                                                \
    n->a = a.n_;                                                   \
    n->b = b.n_;                                                   \
    n->size = a.connective_count() + b.connective_count() + 1;     \
    return Formula(std::move(n));                                  \
  }

BBI_BIN_FACTORY(conj, Conn::And)
BBI_BIN_FACTORY(disj, Conn::Or)
BBI_BIN_FACTORY(impl, Conn::Imp)
BBI_BIN_FACTORY(star, Conn::Star)
BBI_BIN_FACTORY(wand, Conn::Wand)
#undef BBI_BIN_FACTORY

const std::string& Formula::atom_name() const {
  if (!is_atom()) throw std::logic_error("atom_name on non-atom");
  return n_->name;
}

Formula Formula::sub() const {
  if (conn() != Conn::Not) throw std::logic_error("sub on non-negation");
  return Formula(n_->a);
}

Formula Formula::lhs() const {
  if (!is_binary(conn())) throw std::logic_error("lhs on non-binary formula");
  return Formula(n_->a);
}

Formula Formula::rhs() const {
  if (!is_binary(conn())) throw std::logic_error("rhs on non-binary formula");
  return Formula(n_->b);
}

int Formula::compare(const Formula& o) const {
  if (n_ == o.n_) return 0;
  if (conn() != o.conn()) return conn() < o.conn() ? -1 : 1;
  switch (conn()) {
    case Conn::Atom: {
      int c = n_->name.compare(o.n_->name);
      return c < 0 ? -1 : (c == 0 ? 0 : 1);
    }
    case Conn::Top:
    case Conn::Bot:
    case Conn::MEmp:
      return 0;
    case Conn::Not:
      return sub().compare(o.sub());
    default: {
      int c = lhs().compare(o.lhs());
      if (c != 0) return c;
      return rhs().compare(o.rhs());
    }
  }
}

// -------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Top, Bot, MEmp, Not, And, Or, Imp, Star, Wand, LParen, RParen, End };

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Top: return "'T'";
    case Tok::Bot: return "'F'";
    case Tok::MEmp: return "'T*'";
    case Tok::Not: return "'~'";
    case Tok::And: return "'&'";
    case Tok::Or: return "'|'";
    case Tok::Imp: return "'->'";
    case Tok::Star: return "'*'";
    case Tok::Wand: return "'-*'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  Tok tok() const { return tok_; }
  const std::string& ident() const { return ident_; }
  size_t tok_pos() const { return tok_pos_; }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) pos_++;
    tok_pos_ = pos_;
    if (pos_ >= text_.size()) {
      tok_ = Tok::End;
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        pos_++;
      ident_.assign(text_.substr(start, pos_ - start));
      if (ident_ == "T") {
        // longest match: 'T*' is one token when the star is adjacent
        if (pos_ < text_.size() && text_[pos_] == '*') {
          pos_++;
          tok_ = Tok::MEmp;
        } else {
          tok_ = Tok::Top;
        }
      } else if (ident_ == "F") {
        tok_ = Tok::Bot;
      } else if (ident_ == "emp") {
        tok_ = Tok::MEmp;
      } else {
        tok_ = Tok::Ident;
      }
      return;
    }
    pos_++;
    switch (c) {
      case '~': tok_ = Tok::Not; return;
      case '&': tok_ = Tok::And; return;
      case '|': tok_ = Tok::Or; return;
      case '*': tok_ = Tok::Star; return;
      case '(': tok_ = Tok::LParen; return;
      case ')': tok_ = Tok::RParen; return;
      case '-':
        if (pos_ < text_.size() && text_[pos_] == '>') {
          pos_++;
          tok_ = Tok::Imp;
          return;
        }
        if (pos_ < text_.size() && text_[pos_] == '*') {
          pos_++;
          tok_ = Tok::Wand;
          return;
        }
        throw ParseError("lexical error: stray '-'", tok_pos_);
      default:
        throw ParseError(std::string("lexical error: unexpected character '") + c + "'", tok_pos_);
    }
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  size_t tok_pos_ = 0;
  Tok tok_ = Tok::End;
  std::string ident_;
};

constexpr int kUnaryPrec = 6;

int binary_prec(Tok t) {
  switch (t) {
    case Tok::Star: return 5;
    case Tok::And: return 4;
    case Tok::Or: return 3;
    case Tok::Wand: return 2;
    case Tok::Imp: return 1;
    default: return -1;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lx_(text) {}

  Formula parse() {
    Formula f = parse_binary(1);
    if (lx_.tok() != Tok::End)
      throw ParseError(std::string("syntax error: unexpected ") + tok_name(lx_.tok()) +
                           ", expected a binary connective or end of input",
                       lx_.tok_pos());
    return f;
  }

 private:
  Formula parse_binary(int min_prec) {
    Formula left = parse_unary();
    for (;;) {
      Tok t = lx_.tok();
      int p = binary_prec(t);
      if (p < min_prec) return left;
      lx_.advance();
      Formula right = parse_binary(p);  // right associative: same precedence recurses
      switch (t) {
        case Tok::Star: left = Formula::star(left, right); break;
        case Tok::And: left = Formula::conj(left, right); break;
        case Tok::Or: left = Formula::disj(left, right); break;
        case Tok::Wand: left = Formula::wand(left, right); break;
        case Tok::Imp: left = Formula::impl(left, right); break;
        default: throw ParseError("internal parser error", lx_.tok_pos());
      }
    }
  }

  Formula parse_unary() {
    switch (lx_.tok()) {
      case Tok::Not: {
        lx_.advance();
        return Formula::neg(parse_unary());
      }
      case Tok::Top: lx_.advance(); return Formula::top();
      case Tok::Bot: lx_.advance(); return Formula::bot();
      case Tok::MEmp: lx_.advance(); return Formula::memp();
      case Tok::Ident: {
        std::string name = lx_.ident();
        lx_.advance();
        return Formula::atom(std::move(name));
      }
      case Tok::LParen: {
        lx_.advance();
        Formula f = parse_binary(1);
        if (lx_.tok() != Tok::RParen)
          throw ParseError(std::string("syntax error: expected ')' but found ") + tok_name(lx_.tok()),
                           lx_.tok_pos());
        lx_.advance();
        return f;
      }
      default:
        throw ParseError(std::string("syntax error: expected a formula but found ") + tok_name(lx_.tok()),
                         lx_.tok_pos());
    }
  }

  Lexer lx_;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

// -------------------------------------------------------------------------
// Printer

namespace {

int node_prec(const Formula& f) {
  switch (f.conn()) {
    case Conn::Star: return 5;
    case Conn::And: return 4;
    case Conn::Or: return 3;
    case Conn::Wand: return 2;
    case Conn::Imp: return 1;
    default: return kUnaryPrec;
  }
}

const char* op_text(Conn c) {
  switch (c) {
    case Conn::Star: return " * ";
    case Conn::And: return " & ";
    case Conn::Or: return " | ";
    case Conn::Wand: return " -* ";
    case Conn::Imp: return " -> ";
    default: return "";
  }
}

void print_rec(const Formula& f, int min_prec, std::string& out) {
  int p = node_prec(f);
  bool parens = p < min_prec;
  if (parens) out += '(';
  switch (f.conn()) {
    case Conn::Atom: out += f.atom_name(); break;
    case Conn::Top: out += 'T'; break;
    case Conn::Bot: out += 'F'; break;
    case Conn::MEmp: out += "T*"; break;
    case Conn::Not:
      out += '~';
      print_rec(f.sub(), kUnaryPrec, out);
      break;
    default:
      print_rec(f.lhs(), p + 1, out);  // right associative: left child must bind tighter
      out += op_text(f.conn());
      print_rec(f.rhs(), p, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string to_string(const Formula& f) {
  std::string out;
  print_rec(f, 1, out);
  return out;
}

std::vector<std::string> atoms_of(const Formula& f) {
  std::set<std::string> acc;
  std::vector<Formula> stack{f};
  while (!stack.empty()) {
    Formula cur = stack.back();
    stack.pop_back();
    switch (cur.conn()) {
      case Conn::Atom: acc.insert(cur.atom_name()); break;
      case Conn::Not: stack.push_back(cur.sub()); break;
      case Conn::Top:
      case Conn::Bot:
      case Conn::MEmp: break;
      default:
        stack.push_back(cur.lhs());
        stack.push_back(cur.rhs());
        break;
    }
  }
  return {acc.begin(), acc.end()};
}

std::vector<SuiteEntry> parse_suite(std::string_view contents) {
  std::vector<SuiteEntry> out;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= contents.size()) {
    size_t nl = contents.find('\n', pos);
    std::string_view line =
        contents.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    line_no++;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b != std::string_view::npos) {
      size_t e = line.find_last_not_of(" \t\r");
      std::string_view body = line.substr(b, e - b + 1);
      try {
        out.push_back({line_no, std::string(body), parse_formula(body)});
      } catch (const ParseError& err) {
        throw ParseError("line " + std::to_string(line_no) + ": " + err.what(), err.position);
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace bbi
