#include <doctest.h>

#include <random>

#include "bbi/formula.hpp"
#include "helpers.hpp"

using namespace bbi;

TEST_CASE("parsing follows the declared precedence table") {
  // a -> T* * a  ==  Imp(a, Star(T*, a))
  Formula f = parse_formula("a -> T* * a");
  CHECK(f.conn() == Conn::Imp);
  CHECK(f.lhs() == Formula::atom("a"));
  CHECK(f.rhs().conn() == Conn::Star);
  CHECK(f.rhs().lhs().conn() == Conn::MEmp);
  CHECK(f.rhs().rhs() == Formula::atom("a"));

  CHECK(parse_formula("T").conn() == Conn::Top);

  // star binds tighter than the additive implication
  Formula g = parse_formula("a * b -> c");
  CHECK(g.conn() == Conn::Imp);
  CHECK(g.lhs().conn() == Conn::Star);

  // the benchmark shape with nested negations and wands
  Formula h = parse_formula("~((a -* ~(a * b)) & ((~a -* ~b) & b))");
  CHECK(h.conn() == Conn::Not);
  Formula inner = h.sub();
  CHECK(inner.conn() == Conn::And);
  CHECK(inner.lhs().conn() == Conn::Wand);
  CHECK(inner.lhs().lhs() == Formula::atom("a"));
  CHECK(inner.lhs().rhs().conn() == Conn::Not);
  CHECK(inner.rhs().conn() == Conn::And);
  CHECK(inner.rhs().lhs().conn() == Conn::Wand);
  CHECK(inner.rhs().lhs().lhs().conn() == Conn::Not);
  CHECK(inner.rhs().rhs() == Formula::atom("b"));
}

TEST_CASE("binary connectives associate to the right") {
  Formula f = parse_formula("a -* b -* c");
  CHECK(f.conn() == Conn::Wand);
  CHECK(f.lhs() == Formula::atom("a"));
  CHECK(f.rhs().conn() == Conn::Wand);

  Formula g = parse_formula("a * b * c");
  CHECK(g.lhs() == Formula::atom("a"));
  CHECK(g.rhs().conn() == Conn::Star);
}

TEST_CASE("the unit token lexes by longest match") {
  // with a space, T is the additive truth composed with a
  Formula spaced = parse_formula("T * a");
  CHECK(spaced.conn() == Conn::Star);
  CHECK(spaced.lhs().conn() == Conn::Top);

  // without a space it is the multiplicative unit
  CHECK(parse_formula("T*").conn() == Conn::MEmp);
  CHECK(parse_formula("emp").conn() == Conn::MEmp);
  CHECK(parse_formula("T**a") == parse_formula("T* * a"));

  // identifiers starting with T are ordinary atoms
  CHECK(parse_formula("Tx").conn() == Conn::Atom);
}

TEST_CASE("printing emits minimal parentheses and inverts parsing") {
  CHECK(to_string(parse_formula("a -> T* * a")) == "a -> T* * a");
  CHECK(to_string(Formula::top()) == "T");
  Formula a = Formula::atom("a"), b = Formula::atom("b"), c = Formula::atom("c");
  CHECK(to_string(Formula::star(Formula::star(a, b), c)) == "(a * b) * c");
  CHECK(to_string(Formula::star(a, Formula::star(b, c))) == "a * b * c");
  CHECK(to_string(Formula::neg(Formula::neg(a))) == "~~a");
  CHECK(to_string(Formula::neg(Formula::conj(a, b))) == "~(a & b)");
}

TEST_CASE("parse errors carry positions and expectations") {
  CHECK_THROWS_AS(parse_formula("a -> "), ParseError);
  CHECK_THROWS_AS(parse_formula("a @ b"), ParseError);
  CHECK_THROWS_AS(parse_formula("(a -> b"), ParseError);
  CHECK_THROWS_AS(parse_formula("a b"), ParseError);
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("a -"), ParseError);
  try {
    parse_formula("a & (b | )");
  } catch (const ParseError& e) {
    CHECK(e.position == 9);
  }
}

TEST_CASE("reserved words cannot become atoms") {
  CHECK_THROWS_AS(Formula::atom("T"), std::invalid_argument);
  CHECK_THROWS_AS(Formula::atom("F"), std::invalid_argument);
  CHECK_THROWS_AS(Formula::atom("emp"), std::invalid_argument);
  CHECK_THROWS_AS(Formula::atom(""), std::invalid_argument);
  CHECK_THROWS_AS(Formula::atom("1a"), std::invalid_argument);
  CHECK_NOTHROW(Formula::atom("T1"));
  CHECK_NOTHROW(Formula::atom("f_0"));
}

TEST_CASE("connective count is the size measure") {
  CHECK(parse_formula("a").connective_count() == 0);
  CHECK(parse_formula("T*").connective_count() == 0);
  CHECK(parse_formula("~a").connective_count() == 1);
  CHECK(parse_formula("a * b -> c").connective_count() == 2);
}

TEST_CASE("round trip: parse after print is the identity") {
  std::mt19937 rng(20240817);
  for (int i = 0; i < 1000; i++) {
    Formula f = testing::random_formula(rng, 8);
    CAPTURE(to_string(f));
    CHECK(parse_formula(to_string(f)) == f);
  }
}

TEST_CASE("suite files: comments and blank lines are ignored") {
  auto entries = parse_suite("# header\n\n a -> a  # trailing\n\nT*\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].line == 3);
  CHECK(entries[0].formula == parse_formula("a -> a"));
  CHECK(entries[1].text == "T*");
  CHECK_THROWS_AS(parse_suite("a -> a\nb &&\n"), ParseError);
}

TEST_CASE("atoms_of finds every atom once, sorted") {
  auto atoms = atoms_of(parse_formula("(q * p) -> ~(p & T* & r)"));
  REQUIRE(atoms.size() == 3);
  CHECK(atoms[0] == "p");
  CHECK(atoms[1] == "q");
  CHECK(atoms[2] == "r");
}
