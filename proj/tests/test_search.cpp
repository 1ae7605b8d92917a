#include <doctest.h>

#include "bbi/search.hpp"
#include "bbi/semantics.hpp"
#include "helpers.hpp"

using namespace bbi;
using namespace bbi::testing;

TEST_CASE("saturation decomposes the invertible connectives exhaustively") {
  SUBCASE("left stars split with fresh labels") {
    SymSequent s = initial_sequent(parse_formula("((a * b) * c) -> (a * (b * c))"));
    LabelGen gen("a");
    gen.avoid(W("a0"));
    auto leaves = saturate(s, gen);
    REQUIRE(leaves.size() == 1);
    const SymSequent& leaf = leaves[0];
    CHECK(leaf.rels.count(rel(W("a1"), W("a2"), W("a0"))));
    CHECK(leaf.rels.count(rel(W("a3"), W("a4"), W("a1"))));
    CHECK(leaf.lhs.contains({W("a3"), Formula::atom("a")}));
    CHECK(leaf.lhs.contains({W("a4"), Formula::atom("b")}));
    CHECK(leaf.lhs.contains({W("a2"), Formula::atom("c")}));
    CHECK(leaf.rhs.contains({W("a0"), parse_formula("a * (b * c)")}));
  }
  SUBCASE("falsum on the left closes the branch") {
    SymSequent s;
    s.lhs.add({W("w"), Formula::bot()});
    s.rhs.add({W("w"), Formula::atom("p")});
    LabelGen gen("a");
    CHECK(saturate(s, gen).empty());
  }
  SUBCASE("a left unit turns into a relational atom") {
    SymSequent s;
    s.lhs.add({W("w"), Formula::memp()});
    s.lhs.add({W("w"), Formula::atom("p")});
    LabelGen gen("a");
    auto leaves = saturate(s, gen);
    REQUIRE(leaves.size() == 1);
    CHECK(leaves[0].rels.count(rel(EPS(), W("w"), EPS())));
    CHECK(!leaves[0].lhs.contains({W("w"), Formula::memp()}));
  }
  SUBCASE("branching rules multiply the leaves") {
    SymSequent s = initial_sequent(parse_formula("(a | b) -> (a | b)"));
    LabelGen gen("a");
    gen.avoid(W("a0"));
    CHECK(saturate(s, gen).size() == 2);
  }
  SUBCASE("every step consumes its principal: branch length is bounded") {
    std::mt19937 rng(5150);
    std::function<int(const Formula&)> nodes = [&](const Formula& f) -> int {
      switch (f.conn()) {
        case Conn::Atom: return 1;
        case Conn::Top:
        case Conn::Bot:
        case Conn::MEmp: return 1;
        case Conn::Not: return 1 + nodes(f.sub());
        default: return 1 + nodes(f.lhs()) + nodes(f.rhs());
      }
    };
    for (int i = 0; i < 60; i++) {
      Formula f = random_formula(rng, 5);
      SymSequent s = initial_sequent(f);
      LabelGen gen("a");
      gen.avoid(W("a0"));
      int steps = 0;
      saturate(s, gen, &steps);
      CAPTURE(to_string(f));
      CHECK(steps <= nodes(f));
    }
  }
}

TEST_CASE("prove handles the canonical positives and negatives") {
  SUBCASE("the unit expansion is proved and matches the expected rule multiset") {
    Outcome out = prove(parse_formula("a -> T* * a"));
    REQUIRE(out.proved);
    auto counts = out.data->ground.rule_counts();
    CHECK(counts[RuleId::ImpR] == 1);
    CHECK(counts[RuleId::StarR] == 1);
    CHECK(counts[RuleId::MEmpR] == 1);
    CHECK(counts[RuleId::Id] == 1);
    CHECK(counts[RuleId::Cut] == 0);
    CHECK(check(out.data->ground).accepted);
  }
  SUBCASE("the bare unit at a generic world is unprovable") {
    Outcome out = prove(parse_formula("T*"));
    CHECK(!out.proved);
    CHECK(!out.stats.timed_out);
  }
  SUBCASE("a star-shuffling validity goes through") {
    Outcome out = prove(parse_formula("T* -> ((a * (b * c)) -* ((a * b) * c))"));
    CHECK(out.proved);
  }
  SUBCASE("plain propositional reasoning stays propositional") {
    Outcome out = prove(parse_formula("(a & ~a) -> b"));
    REQUIRE(out.proved);
    for (const auto& [r, n] : out.data->ground.rule_counts()) CHECK(!is_structural(r));
  }
}

TEST_CASE("reconstruction grounds the symbolic tree") {
  SUBCASE("the reassociation proof contains explicit structural steps") {
    Outcome out = prove(parse_formula("((a * b) * c) -> (a * (b * c))"));
    REQUIRE(out.proved);
    auto counts = out.data->ground.rule_counts();
    CHECK(counts[RuleId::A] >= 1);
    CHECK(counts[RuleId::E] >= 1);
    CHECK(check(out.data->ground).accepted);
  }
  SUBCASE("an empty constraint set reconstructs without structural steps") {
    Outcome out = prove(parse_formula("F -> b"));
    REQUIRE(out.proved);
    auto counts = out.data->ground.rule_counts();
    CHECK(counts.size() == 2);
    CHECK(counts[RuleId::ImpR] == 1);
    CHECK(counts[RuleId::BotL] == 1);
  }
  SUBCASE("a missing assignment is reported by name") {
    Outcome out = prove(parse_formula("a -> T* * a"));
    REQUIRE(out.proved);
    Solution broken = out.data->solution;
    Subst empty;
    broken.theta = empty;
    for (SolveStep& st : broken.steps) st.theta = empty;
    try {
      reconstruct(out.data->symbolic, out.data->constraints, broken);
      FAIL("expected a reconstruction error");
    } catch (const ReconstructError& e) {
      CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
  }
}

TEST_CASE("search honors budgets monotonically") {
  Formula f = parse_formula("(a * (b * c)) -> (c * (a * b))");
  SearchOptions low;
  low.multiplicity = 1;
  Outcome at1 = prove(f, low);
  if (at1.proved) {
    for (int m = 2; m <= 3; m++) {
      SearchOptions more = low;
      more.multiplicity = m;
      CHECK(prove(f, more).proved);
    }
  }
}

TEST_CASE("proved formulas never admit small countermodels") {
  for (const char* text : {"a -> T* * a", "T* * a -> a", "a * b -> b * a",
                           "~(T* & a & (b * ~(c -* (T* -> a))))"}) {
    Outcome out = prove(parse_formula(text));
    REQUIRE(out.proved);
    CAPTURE(text);
    CHECK(!countermodel(parse_formula(text), 3).has_value());
  }
}

TEST_CASE("auxiliary rules appear in proofs only when enabled") {
  Formula pd_formula = parse_formula("(~(T -* ~T*) * ~(T -* ~T*)) -> ~(T -* ~T*)");
  SearchOptions opts;
  opts.extras = {RuleId::P};
  Outcome out = prove(pd_formula, opts);
  REQUIRE(out.proved);
  auto counts = out.data->ground.rule_counts();
  CHECK(counts[RuleId::P] >= 1);
  // accepted with P enabled, rejected by the plain checker
  CheckOptions with;
  with.extras = {RuleId::P};
  CHECK(check(out.data->ground, with).accepted);
  CHECK(!check(out.data->ground).accepted);
}

TEST_CASE("the indivisible-unit rule separates provability and models coherently") {
  Formula f = parse_formula("((a * b) & T*) -> (a & b)");
  SearchOptions iu;
  iu.extras = {RuleId::IU};
  Outcome with = prove(f, iu);
  REQUIRE(with.proved);
  CHECK(check(with.data->ground, CheckOptions{false, {RuleId::IU}}).accepted);
  Outcome without = prove(f);
  CHECK(!without.proved);
  // the countermodel lives outside the indivisible-unit class
  ModelClassFlags nd{}, iu_models{false, false, true, false};
  CHECK(countermodel(f, 3, nd).has_value());
  CHECK(!countermodel(f, 3, iu_models).has_value());
}

TEST_CASE("emitted statistics are populated") {
  Outcome out = prove(parse_formula("a -> a"));
  REQUIRE(out.proved);
  CHECK(out.stats.branches >= 1);
  CHECK(out.stats.solves >= 1);
  CHECK(out.stats.wall_ms >= 0.0);
  CHECK(out.stats.multiplicity_used == 1);
}
