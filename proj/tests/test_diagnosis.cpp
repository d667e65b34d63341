#include "prooflab/diagnosis.hpp"

#include <random>

#include "doctest.h"
#include "oracles.hpp"

using namespace prooflab;
namespace oracle = prooflab::testing;

namespace {

Problem make_problem(const std::string& id,
                     const std::vector<std::string>& premises,
                     const std::string& conclusion) {
  Problem p;
  p.id = id;
  p.level = 3;
  for (const auto& s : premises) p.premises.push_back(parse(s));
  p.conclusion = parse(conclusion);
  return p;
}

SaturationConfig toy_config() {
  SaturationConfig cfg;
  cfg.max_complexity = 4;
  cfg.max_statements = 4000;
  return cfg;
}

}  // namespace

TEST_CASE("the direct simplification step is optimal") {
  SaturationConfig cfg = toy_config();
  Problem p = make_problem("p", {"(M & N)"}, "N");
  SolutionSpace space = saturate(p, cfg);
  ProofState state{p, {}};
  StepClaim claim{parse("N"), RuleId::Simp, {parse("(M & N)")},
                  std::nullopt, std::nullopt};
  Diagnosis d = classify(space, state, claim);
  CHECK(d.label == DiagLabel::Optimal);
  CHECK(d.reason == DiagReason::DistanceReduced);
  CHECK(d.d_before == 1);
  CHECK(d.d_after == 0);
}

TEST_CASE("the double-negation misapplication is incorrect") {
  // premises from the paper's worked failure: 1. ~(~G & B)  2. (G -> D)
  SaturationConfig cfg;
  cfg.max_complexity = 5;
  Problem p = make_problem("p", {"~(~G & B)", "(G -> D)"}, "(~~G | ~B)");
  SolutionSpace space = saturate(p, cfg);
  ProofState state{p, {}};
  StepClaim claim{parse("(G & B)"), RuleId::DN, {parse("~(~G & B)")},
                  std::nullopt, std::nullopt};
  Diagnosis d = classify(space, state, claim);
  CHECK(d.label == DiagLabel::Incorrect);
  CHECK(d.reason == DiagReason::BadJustification);

  // the solution-context step itself is optimal here
  StepClaim dem{parse("(~~G | ~B)"), RuleId::DeM, {parse("~(~G & B)")},
                std::nullopt, std::nullopt};
  CHECK(classify(space, state, dem).label == DiagLabel::Optimal);
}

TEST_CASE("a valid step off the shortest path is a valid alternative") {
  SaturationConfig cfg = toy_config();
  Problem p = make_problem("p", {"A", "B"}, "(A & B)");
  SolutionSpace space = saturate(p, cfg);
  ProofState state{p, {}};
  StepClaim claim{parse("(A | B)"), RuleId::Add, {parse("A")},
                  std::nullopt, std::nullopt};
  Diagnosis d = classify(space, state, claim);
  CHECK(d.label == DiagLabel::ValidAlternative);
  CHECK(d.reason == DiagReason::DistanceUnchanged);
  CHECK(d.d_before == 1);
  CHECK(d.d_after == 1);

  // confirmed by the exhaustive search over the two-atom space
  FormulaSet start{parse("A"), parse("B")};
  CHECK(oracle::oracle_distance(p, cfg, start) == 1);
  FormulaSet augmented = start;
  augmented.insert(parse("(A | B)"));
  CHECK(oracle::oracle_distance(p, cfg, augmented) == 1);
}

TEST_CASE("unknown parents and redundancy are incorrect") {
  SaturationConfig cfg = toy_config();
  Problem p = make_problem("p", {"(A -> B)", "A"}, "B");
  SolutionSpace space = saturate(p, cfg);
  ProofState state{p, {}};

  StepClaim unknown{parse("Z"), RuleId::Simp, {parse("(Z & W)")},
                    std::nullopt, std::nullopt};
  Diagnosis du = classify(space, state, unknown);
  CHECK(du.label == DiagLabel::Incorrect);
  CHECK(du.reason == DiagReason::UnknownParent);

  StepClaim redundant{parse("A"), RuleId::Simp, {parse("A")},
                      std::nullopt, std::nullopt};
  Diagnosis dr = classify(space, state, redundant);
  CHECK(dr.label == DiagLabel::Incorrect);
  CHECK(dr.reason == DiagReason::Redundant);
}

TEST_CASE("agent label mapping") {
  CHECK(map_agent_label("Suboptimal") == DiagLabel::ValidAlternative);
  CHECK(map_agent_label("correct") == DiagLabel::Optimal);
  CHECK(map_agent_label("CORRECT.") == DiagLabel::Optimal);
  CHECK(map_agent_label("Optimal") == DiagLabel::Optimal);
  CHECK(map_agent_label("Valid Alternative") == DiagLabel::ValidAlternative);
  CHECK(map_agent_label("valid-alternative") == DiagLabel::ValidAlternative);
  CHECK(map_agent_label("Incorrect") == DiagLabel::Incorrect);
  CHECK_FALSE(map_agent_label("kinda right").has_value());
  CHECK_FALSE(map_agent_label("").has_value());
}

TEST_CASE("perturbing a valid edge's justification flips it to incorrect") {
  SaturationConfig cfg = toy_config();
  std::mt19937 rng(101);
  const std::vector<Problem> problems = {
      make_problem("q1", {"(A -> B)", "A"}, "B"),
      make_problem("q2", {"(A | B)", "~A"}, "B"),
      make_problem("q3", {"(A & B)", "(B -> C)"}, "C"),
      make_problem("q4", {"~(A & B)"}, "(~A | ~B)"),
  };
  int samples = 0;
  for (const auto& p : problems) {
    SolutionSpace space = saturate(p, cfg);
    ProofState state{p, {}};
    for (const auto& e : space.derivations) {
      bool applicable = true;
      for (int parent : e.parents) {
        if (!state.contains(space.statements[parent])) {
          applicable = false;
          break;
        }
      }
      if (!applicable || state.contains(space.statements[e.result])) continue;

      std::vector<Formula> parents;
      for (int parent : e.parents) parents.push_back(space.statements[parent]);
      const Formula result = space.statements[e.result];

      // rule perturbation: any other rule that does not also justify the
      // claim must flip the label
      for (RuleId other : all_rules()) {
        if (other == e.rule) continue;
        if (rule_arity(other) != static_cast<int>(parents.size())) {
          StepClaim claim{result, other, parents, std::nullopt, std::nullopt};
          CHECK(classify(space, state, claim).label == DiagLabel::Incorrect);
          ++samples;
          continue;
        }
        if (check_justification(other, parents, result, space.relevant,
                                cfg.rule_options)
                .valid) {
          continue;  // an independently valid justification, not a perturbation
        }
        StepClaim claim{result, other, parents, std::nullopt, std::nullopt};
        CHECK(classify(space, state, claim).label == DiagLabel::Incorrect);
        ++samples;
      }

      // parent perturbation: swap one parent for another known statement
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(state.known().size()) - 1);
      for (std::size_t slot = 0; slot < parents.size(); ++slot) {
        auto known = state.known();
        for (const auto& replacement : known) {
          if (replacement == parents[slot]) continue;
          std::vector<Formula> perturbed = parents;
          perturbed[slot] = replacement;
          if (check_justification(e.rule, perturbed, result, space.relevant,
                                  cfg.rule_options)
                  .valid) {
            continue;
          }
          StepClaim claim{result, e.rule, perturbed, std::nullopt,
                          std::nullopt};
          CHECK(classify(space, state, claim).label == DiagLabel::Incorrect);
          ++samples;
        }
      }
    }
  }
  CHECK(samples >= 100);
}

TEST_CASE("claims on cap-free spaces get exactly one of the three labels") {
  SaturationConfig cfg = toy_config();
  std::mt19937 rng(211);
  Problem p = make_problem("p", {"(A -> B)", "(B -> C)", "A"}, "C");
  SolutionSpace space = saturate(p, cfg);
  REQUIRE(space.saturation_complete);
  ProofState state{p, {}};
  const std::vector<char> pool{'A', 'B', 'C'};
  std::uniform_int_distribution<int> rule_pick(0, kRuleCount - 1);
  for (int i = 0; i < 300; ++i) {
    RuleId rule = all_rules()[rule_pick(rng)];
    std::vector<Formula> parents;
    std::uniform_int_distribution<int> parent_count(1, 3);
    const int count = parent_count(rng);
    for (int j = 0; j < count; ++j) {
      parents.push_back(oracle::random_formula(rng, pool, 2));
    }
    StepClaim claim{oracle::random_formula(rng, pool, 2), rule, parents,
                    std::nullopt, std::nullopt};
    Diagnosis d = classify(space, state, claim);
    CHECK(d.label != DiagLabel::Indeterminate);
    if (d.label == DiagLabel::Optimal) {
      REQUIRE(d.d_before.has_value());
      REQUIRE(d.d_after.has_value());
      CHECK(*d.d_after == *d.d_before - 1);
    }
    if (d.label == DiagLabel::ValidAlternative) {
      REQUIRE(d.d_before.has_value());
      REQUIRE(d.d_after.has_value());
      CHECK(*d.d_after == *d.d_before);
    }
  }
}

TEST_CASE("valid edges only ever keep or reduce the distance by one") {
  SaturationConfig cfg = toy_config();
  Problem p = make_problem("p", {"(A -> B)", "(A | C)", "~C"}, "B");
  SolutionSpace space = saturate(p, cfg);
  ProofState state{p, {}};
  for (const auto& e : space.derivations) {
    bool applicable = true;
    for (int parent : e.parents) {
      if (!state.contains(space.statements[parent])) applicable = false;
    }
    if (!applicable || state.contains(space.statements[e.result])) continue;
    std::vector<Formula> parents;
    for (int parent : e.parents) parents.push_back(space.statements[parent]);
    StepClaim claim{space.statements[e.result], e.rule, parents, std::nullopt,
                    std::nullopt};
    Diagnosis d = classify(space, state, claim);
    REQUIRE((d.label == DiagLabel::Optimal ||
             d.label == DiagLabel::ValidAlternative));
    REQUIRE(d.d_before.has_value());
    REQUIRE(d.d_after.has_value());
    CHECK(*d.d_after >= *d.d_before - 1);
    CHECK(*d.d_after <= *d.d_before);
  }
}
