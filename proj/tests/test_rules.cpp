#include "prooflab/rules.hpp"

#include <random>

#include "doctest.h"
#include "oracles.hpp"

using namespace prooflab;
using prooflab::testing::random_formula;

namespace {

FormulaSet no_candidates;

std::vector<std::string> reprs(const FormulaSet& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs) out.push_back(f.str());
  return out;
}

// Builds parents guaranteed to match the rule's pattern, so apply_forward
// yields at least one result to soundness-check.
std::vector<Formula> pattern_parents(RuleId rule, std::mt19937& rng,
                                     const std::vector<char>& pool) {
  const Formula p = random_formula(rng, pool, 2);
  const Formula q = random_formula(rng, pool, 2);
  const Formula r = random_formula(rng, pool, 2);
  const Formula s = random_formula(rng, pool, 2);
  switch (rule) {
    case RuleId::MP:
      return {Formula::implies(p, q), p};
    case RuleId::MT:
      return {Formula::implies(p, q), Formula::negation(q)};
    case RuleId::Conj:
      return {p, q};
    case RuleId::Simp:
      return {Formula::conj(p, q)};
    case RuleId::Add:
      return {p};
    case RuleId::DS:
      return {Formula::disj(p, q), Formula::negation(p)};
    case RuleId::HS:
      return {Formula::implies(p, q), Formula::implies(q, r)};
    case RuleId::CD:
      return {Formula::implies(p, q), Formula::implies(r, s),
              Formula::disj(p, r)};
    default:  // replacement rules take any single statement
      return {random_formula(rng, pool, 3)};
  }
}

}  // namespace

TEST_CASE("rule metadata") {
  CHECK(rule_short_name(RuleId::DeM) == "DeM");
  CHECK(rule_long_name(RuleId::HS) == "Hypothetical Syllogism");
  CHECK(rule_from_name("mp") == RuleId::MP);
  CHECK(rule_from_name("Impl") == RuleId::Impl);
  CHECK_FALSE(rule_from_name("Modus").has_value());
  CHECK(rule_arity(RuleId::CD) == 3);
  CHECK(rule_arity(RuleId::Simp) == 1);
  CHECK(rule_kind(RuleId::DN) == RuleKind::Replacement);
  CHECK(rule_kind(RuleId::DS) == RuleKind::Deductive);
  CHECK(all_rules().size() == 16);
}

TEST_CASE("apply_forward reproduces the worked derivations") {
  // MT: (5) from (3), (4)
  CHECK(reprs(apply_forward(RuleId::MT,
                            {parse("((S -> Y) -> D)"), parse("~D")},
                            no_candidates)) ==
        std::vector<std::string>{"¬(S → Y)"});
  // DS with the negated disjunct on the right, parents in file order
  CHECK(reprs(apply_forward(RuleId::DS,
                            {parse("~(I & Q)"),
                             parse("((S -> Y) | (I & Q))")},
                            no_candidates)) ==
        std::vector<std::string>{"(S → Y)"});
  // De Morgan on the whole statement
  CHECK(reprs(apply_forward(RuleId::DeM, {parse("~(~G & B)")},
                            no_candidates)) ==
        std::vector<std::string>{"(¬¬G ∨ ¬B)"});
  // Implication rewriting under a negation
  auto impl = apply_forward(RuleId::Impl, {parse("~(S -> Y)")}, no_candidates);
  CHECK(impl.count(parse("~(~S | Y)")) == 1);
  // Commutation
  CHECK(reprs(apply_forward(RuleId::Com, {parse("(~N | J)")},
                            no_candidates)) ==
        std::vector<std::string>{"(J ∨ ¬N)"});
  // Simplification returns both conjuncts
  CHECK(reprs(apply_forward(RuleId::Simp, {parse("(M & N)")},
                            no_candidates)) ==
        std::vector<std::string>{"M", "N"});
  // pattern mismatch yields the empty set
  CHECK(apply_forward(RuleId::MP, {parse("A -> C"), parse("B")},
                      no_candidates)
            .empty());
}

TEST_CASE("Add introduces each candidate disjunct") {
  FormulaSet candidates{parse("B"), parse("C")};
  CHECK(reprs(apply_forward(RuleId::Add, {parse("A")}, candidates)) ==
        std::vector<std::string>{"(A ∨ B)", "(A ∨ C)"});
  CHECK(apply_forward(RuleId::Add, {parse("A")}, no_candidates).empty());
}

TEST_CASE("rule options gate the optional forms") {
  // Com/Assoc over conjunctions
  RuleOptions strict;
  strict.com_assoc_on_and = false;
  CHECK(apply_forward(RuleId::Com, {parse("A & B")}, no_candidates, strict)
            .empty());
  CHECK(!apply_forward(RuleId::Com, {parse("A & B")}, no_candidates).empty());
  // self-conjunction off by default
  CHECK(apply_forward(RuleId::Conj, {parse("A"), parse("A")}, no_candidates)
            .empty());
  RuleOptions loose;
  loose.allow_self_conjunction = true;
  CHECK(reprs(apply_forward(RuleId::Conj, {parse("A"), parse("A")},
                            no_candidates, loose)) ==
        std::vector<std::string>{"(A ∧ A)"});
  // dual distribution off by default
  CHECK(apply_forward(RuleId::Dist, {parse("(A | (B & C))")}, no_candidates)
            .empty());
  RuleOptions dual;
  dual.distribute_dual = true;
  CHECK(reprs(apply_forward(RuleId::Dist, {parse("(A | (B & C))")},
                            no_candidates, dual)) ==
        std::vector<std::string>{"((A ∨ B) ∧ (A ∨ C))"});
}

TEST_CASE("DS produces both directions") {
  auto from_left = apply_forward(RuleId::DS, {parse("(P | Q)"), parse("~P")},
                                 no_candidates);
  CHECK(reprs(from_left) == std::vector<std::string>{"Q"});
  auto from_right = apply_forward(RuleId::DS, {parse("(P | Q)"), parse("~Q")},
                                  no_candidates);
  CHECK(reprs(from_right) == std::vector<std::string>{"P"});
}

TEST_CASE("check_justification matches the paper's incorrect example") {
  // Example: claiming (G & B) from ~(~G & B) via double negation
  auto bad = check_justification(RuleId::DN, {parse("~(~G & B)")},
                                 parse("(G & B)"), no_candidates);
  CHECK_FALSE(bad.valid);
  CHECK(bad.failure == JustificationFailure::PatternMismatch);

  CHECK(check_justification(RuleId::MT,
                            {parse("((S -> Y) -> D)"), parse("~D")},
                            parse("~(S -> Y)"), no_candidates)
            .valid);
  CHECK(check_justification(RuleId::Simp, {parse("(M & N)")}, parse("M"),
                            no_candidates)
            .valid);
  // parent order is insignificant
  CHECK(check_justification(RuleId::MP, {parse("A"), parse("(A -> B)")},
                            parse("B"), no_candidates)
            .valid);

  auto arity = check_justification(RuleId::MP, {parse("A")}, parse("B"),
                                   no_candidates);
  CHECK(arity.failure == JustificationFailure::ArityMismatch);
  auto wrong = check_justification(RuleId::MP, {parse("(A -> B)"), parse("A")},
                                   parse("C"), no_candidates);
  CHECK(wrong.failure == JustificationFailure::ResultMismatch);
}

TEST_CASE("soundness oracle") {
  CHECK(soundness_oracle(RuleId::MP, {parse("(A -> B)"), parse("A")},
                         parse("B")));
  CHECK(soundness_oracle(RuleId::DS, {parse("(A | B)"), parse("~A")},
                         parse("B")));
  CHECK_FALSE(soundness_oracle(RuleId::MP, {parse("(A -> B)"), parse("B")},
                               parse("A")));
  // replacement rules must preserve equivalence, not just entailment
  CHECK_FALSE(soundness_oracle(RuleId::DN, {parse("(A & B)")}, parse("A")));
  CHECK_THROWS_AS(
      soundness_oracle(RuleId::Conj,
                       {parse("(A&B&C&D&E&F&G)"), parse("(H&I&J&K&L&M)")},
                       parse("((A&B&C&D&E&F&G) & (H&I&J&K&L&M))")),
      TooManyAtomsError);
}

TEST_CASE("every generated application is sound" *
          doctest::timeout(60)) {
  std::mt19937 rng(7);
  const std::vector<char> pool{'A', 'B', 'C', 'D'};
  FormulaSet candidates{parse("A"), parse("(B & C)"), parse("~D")};
  RuleOptions opts;
  opts.allow_self_conjunction = true;
  opts.distribute_dual = true;
  for (RuleId rule : all_rules()) {
    for (int i = 0; i < 150; ++i) {
      const auto parents = pattern_parents(rule, rng, pool);
      for (const auto& derived :
           apply_forward(rule, parents, candidates, opts)) {
        CAPTURE(rule_short_name(rule));
        CAPTURE(derived.str());
        REQUIRE(soundness_oracle(rule, parents, derived));
      }
    }
  }
}

TEST_CASE("checker and generator agree") {
  std::mt19937 rng(11);
  const std::vector<char> pool{'A', 'B', 'C'};
  FormulaSet candidates{parse("A"), parse("~B")};
  for (RuleId rule : all_rules()) {
    for (int i = 0; i < 60; ++i) {
      const auto parents = pattern_parents(rule, rng, pool);
      const auto results = apply_forward(rule, parents, candidates);
      for (const auto& r : results) {
        CHECK(check_justification(rule, parents, r, candidates).valid);
      }
      const Formula other = random_formula(rng, pool, 3);
      if (results.count(other) == 0) {
        CHECK_FALSE(
            check_justification(rule, parents, other, candidates).valid);
      }
    }
  }
}

TEST_CASE("replacement rules invert at the same occurrence") {
  std::mt19937 rng(13);
  const std::vector<char> pool{'A', 'B', 'C'};
  for (RuleId rule : all_rules()) {
    if (rule_kind(rule) != RuleKind::Replacement) continue;
    for (int i = 0; i < 100; ++i) {
      const Formula f = random_formula(rng, pool, 3);
      for (const auto& g : apply_forward(rule, {f}, no_candidates)) {
        CAPTURE(rule_short_name(rule));
        CAPTURE(f.str());
        CAPTURE(g.str());
        CHECK(apply_forward(rule, {g}, no_candidates).count(f) == 1);
      }
    }
  }
}

TEST_CASE("arity violations throw") {
  CHECK_THROWS_AS(apply_forward(RuleId::MP, {parse("A")}, no_candidates),
                  ArityMismatchError);
  CHECK_THROWS_AS(
      apply_forward(RuleId::Simp, {parse("A"), parse("B")}, no_candidates),
      ArityMismatchError);
}
