// Test-side oracles, kept deliberately naive and independent of the engine's
// indexing, frontier bookkeeping and memoization. The production saturator
// and distance search are checked against these on small problems.

#ifndef PROOFLAB_TESTS_ORACLES_HPP
#define PROOFLAB_TESTS_ORACLES_HPP

#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "prooflab/diagnosis.hpp"
#include "prooflab/rules.hpp"
#include "prooflab/solution_space.hpp"

namespace prooflab::testing {

// Subformula closure plus single negations, complexity-filtered. Mirrors the
// relevant-set contract without sharing its implementation.
inline FormulaSet oracle_relevant_set(const Problem& problem,
                                      const SaturationConfig& cfg) {
  FormulaSet base;
  for (const auto& p : problem.premises) {
    for (const auto& s : subformulas(p)) base.insert(s);
  }
  for (const auto& s : subformulas(problem.conclusion)) base.insert(s);
  FormulaSet closed = base;
  if (cfg.relevant_closure_negation) {
    for (const auto& s : base) closed.insert(Formula::negation(s));
  }
  FormulaSet out;
  for (const auto& s : closed) {
    if (complexity(s, cfg.weights) <= cfg.max_complexity) out.insert(s);
  }
  return out;
}

struct OracleEdge {
  std::string rule;
  std::multiset<std::string> parents;
  std::string result;
  bool operator<(const OracleEdge& o) const {
    return std::tie(rule, parents, result) <
           std::tie(o.rule, o.parents, o.result);
  }
  bool operator==(const OracleEdge& o) const {
    return std::tie(rule, parents, result) ==
           std::tie(o.rule, o.parents, o.result);
  }
};

struct OracleFixpoint {
  FormulaSet statements;
  std::set<OracleEdge> edges;
};

// Unindexed fixpoint: every rule against every ordered tuple of known
// statements, repeated until nothing new appears. No statement or depth
// caps; only the complexity filter and the Add candidate bound apply, so it
// is comparable to a run that reports saturation_complete.
inline OracleFixpoint naive_saturate(const Problem& problem,
                                     const SaturationConfig& cfg) {
  const FormulaSet candidates = oracle_relevant_set(problem, cfg);
  OracleFixpoint out;
  for (const auto& p : problem.premises) out.statements.insert(p);

  bool changed = true;
  while (changed) {
    changed = false;
    const std::vector<Formula> known(out.statements.begin(),
                                     out.statements.end());
    for (RuleId rule : cfg.enabled_rules) {
      const int arity = rule_arity(rule);
      std::vector<std::size_t> tuple(static_cast<std::size_t>(arity), 0);
      while (true) {
        std::vector<Formula> parents;
        for (std::size_t i : tuple) parents.push_back(known[i]);
        for (const auto& r :
             apply_forward(rule, parents, candidates, cfg.rule_options)) {
          if (complexity(r, cfg.weights) > cfg.max_complexity) continue;
          OracleEdge edge;
          edge.rule = std::string(rule_short_name(rule));
          for (const auto& p : parents) edge.parents.insert(p.str());
          edge.result = r.str();
          out.edges.insert(std::move(edge));
          if (out.statements.insert(r).second) changed = true;
        }
        // advance the odometer over known^arity
        int pos = arity - 1;
        while (pos >= 0 && ++tuple[pos] == known.size()) {
          tuple[pos] = 0;
          --pos;
        }
        if (pos < 0) break;
      }
    }
  }
  return out;
}

// Breadth-first search over statement sets, recomputing successors by direct
// rule application. No memoization beyond the per-call visited set.
inline std::optional<int> oracle_distance(const Problem& problem,
                                          const SaturationConfig& cfg,
                                          const FormulaSet& start,
                                          int depth_limit = 16) {
  const FormulaSet candidates = oracle_relevant_set(problem, cfg);
  for (const auto& f : start) {
    if (f == problem.conclusion) return 0;
  }
  auto key_of = [](const FormulaSet& s) {
    std::string key;
    for (const auto& f : s) {
      key += f.str();
      key += '\x1f';
    }
    return key;
  };
  std::deque<std::pair<FormulaSet, int>> queue{{start, 0}};
  std::set<std::string> visited{key_of(start)};
  while (!queue.empty()) {
    auto [state, depth] = queue.front();
    queue.pop_front();
    if (depth >= depth_limit) continue;
    const std::vector<Formula> known(state.begin(), state.end());
    FormulaSet successors;
    for (RuleId rule : cfg.enabled_rules) {
      const int arity = rule_arity(rule);
      std::vector<std::size_t> tuple(static_cast<std::size_t>(arity), 0);
      while (true) {
        std::vector<Formula> parents;
        for (std::size_t i : tuple) parents.push_back(known[i]);
        for (const auto& r :
             apply_forward(rule, parents, candidates, cfg.rule_options)) {
          if (complexity(r, cfg.weights) <= cfg.max_complexity &&
              state.count(r) == 0) {
            successors.insert(r);
          }
        }
        int pos = arity - 1;
        while (pos >= 0 && ++tuple[pos] == known.size()) {
          tuple[pos] = 0;
          --pos;
        }
        if (pos < 0) break;
      }
    }
    for (const auto& s : successors) {
      if (s == problem.conclusion) return depth + 1;
      FormulaSet next = state;
      next.insert(s);
      if (visited.insert(key_of(next)).second) {
        queue.emplace_back(std::move(next), depth + 1);
      }
    }
  }
  return std::nullopt;
}

// Truth-table entailment of `goal` by `premises`.
inline bool oracle_entails(const std::vector<Formula>& premises,
                           const Formula& goal) {
  std::set<char> names = atoms(goal);
  for (const auto& p : premises) {
    auto a = atoms(p);
    names.insert(a.begin(), a.end());
  }
  const std::vector<char> order(names.begin(), names.end());
  for (std::size_t mask = 0; mask < (std::size_t{1} << order.size()); ++mask) {
    std::map<char, bool> assignment;
    for (std::size_t i = 0; i < order.size(); ++i) {
      assignment[order[i]] = (mask >> i) & 1;
    }
    bool all = true;
    for (const auto& p : premises) {
      if (!evaluate(p, assignment)) {
        all = false;
        break;
      }
    }
    if (all && !evaluate(goal, assignment)) return false;
  }
  return true;
}

// Deterministic random formulas for property tests.
inline Formula random_formula(std::mt19937& rng, const std::vector<char>& pool,
                              int max_depth) {
  std::uniform_int_distribution<int> atom_pick(
      0, static_cast<int>(pool.size()) - 1);
  if (max_depth <= 0) return Formula::atom(pool[atom_pick(rng)]);
  std::uniform_int_distribution<int> kind(0, 9);
  const int k = kind(rng);
  if (k < 3) return Formula::atom(pool[atom_pick(rng)]);
  if (k < 5) return Formula::negation(random_formula(rng, pool, max_depth - 1));
  std::uniform_int_distribution<int> conn(0, 3);
  static const Connective conns[4] = {Connective::And, Connective::Or,
                                      Connective::Implies, Connective::Iff};
  return Formula::binary(conns[conn(rng)],
                         random_formula(rng, pool, max_depth - 1),
                         random_formula(rng, pool, max_depth - 1));
}

// Spells a formula with random alias choices, spacing and redundant parens.
inline std::string random_spelling(const Formula& f, std::mt19937& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  auto pick = [&rng](std::initializer_list<const char*> options) {
    std::uniform_int_distribution<int> d(
        0, static_cast<int>(options.size()) - 1);
    return std::string(*(options.begin() + d(rng)));
  };
  std::string inner;
  switch (f.kind()) {
    case Formula::Kind::Atom:
      inner = std::string(1, f.atom_name());
      break;
    case Formula::Kind::Not:
      inner = pick({"¬", "~", "-", "!"}) + random_spelling(f.body(), rng);
      break;
    case Formula::Kind::Binary: {
      std::string op;
      switch (f.connective()) {
        case Connective::And:
          op = pick({"∧", "&", "*"});
          break;
        case Connective::Or:
          op = pick({"∨", "|"});
          break;
        case Connective::Implies:
          op = pick({"→", "->", ">"});
          break;
        case Connective::Iff:
          op = pick({"↔", "<->"});
          break;
      }
      // keep children wrapped so precedence cannot reassociate them
      inner = "(" + random_spelling(f.left(), rng) + (coin(rng) ? " " : "") +
              op + (coin(rng) ? " " : "") + random_spelling(f.right(), rng) +
              ")";
      break;
    }
  }
  if (coin(rng) == 0) inner = "(" + inner + ")";
  return inner;
}

}  // namespace prooflab::testing

#endif  // PROOFLAB_TESTS_ORACLES_HPP
