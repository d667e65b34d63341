#ifndef PROOFLAB_SOLUTION_SPACE_HPP
#define PROOFLAB_SOLUTION_SPACE_HPP

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "prooflab/formula.hpp"
#include "prooflab/rules.hpp"

namespace prooflab {

class InvalidProblemError : public Error {
 public:
  using Error::Error;
};

struct Problem {
  std::string id;
  int level = 0;
  std::vector<Formula> premises;
  Formula conclusion = Formula::atom('A');
};

/// Throws InvalidProblemError on empty or duplicated premises.
void validate_problem(const Problem& problem);

/// One derived statement with its edge annotation.
struct Justified {
  Formula statement;
  RuleId rule;
  std::vector<Formula> parents;
};

struct ProofState {
  Problem problem;
  std::vector<Justified> intermediates;

  std::vector<Formula> known() const;
  bool contains(const Formula& f) const;
};

std::set<RuleId> default_enabled_rules();

struct SaturationConfig {
  int max_statements = 5000;
  int max_complexity = 11;
  int max_depth = 12;
  std::set<RuleId> enabled_rules = default_enabled_rules();
  bool relevant_closure_negation = true;
  RuleOptions rule_options;
  ComplexityWeights weights;
};

struct Distance {
  enum class Kind { Finite, UnreachableProven, UnreachableCap };
  Kind kind = Kind::UnreachableProven;
  int steps = -1;

  bool finite() const { return kind == Kind::Finite; }
  static Distance finite_at(int steps) { return {Kind::Finite, steps}; }
  static Distance unreachable_proven() {
    return {Kind::UnreachableProven, -1};
  }
  static Distance unreachable_cap() { return {Kind::UnreachableCap, -1}; }
  bool operator==(const Distance& o) const {
    return kind == o.kind && (kind != Kind::Finite || steps == o.steps);
  }
};

/// Per-problem derivation hypergraph within the configured bounds, plus the
/// memoized distance function over proof states.
struct SolutionSpace {
  struct Hyperedge {
    int result;
    RuleId rule;
    std::vector<int> parents;  // ascending statement indices
  };

  Problem problem;
  SaturationConfig config;
  std::vector<Formula> statements;  // discovery order, premises first
  std::vector<Hyperedge> derivations;
  bool saturation_complete = true;
  FormulaSet relevant;  // Add candidates, also used when checking claims

  std::optional<int> index_of(const Formula& f) const;

  /// Rebuilds lookup indexes and the distance cache. Called by saturate()
  /// and by io after loading a serialized space.
  void finalize();

  // internal lookup state
  struct Internals;
  std::shared_ptr<Internals> internals;
};

/// Subformulas of premises and conclusion, closed once under negation when
/// configured, filtered by max_complexity. Canonical (string) order.
FormulaSet relevant_set(const Problem& problem, const SaturationConfig& cfg);

/// Bounded-exhaustive forward chaining: the fixpoint of apply_forward over
/// the growing statement set, with Add restricted to the relevant set and
/// every derived statement filtered by max_complexity. Stops cleanly with
/// saturation_complete=false when max_statements or max_depth trips.
/// Deterministic for a fixed problem and config.
SolutionSpace saturate(const Problem& problem, const SaturationConfig& cfg);

/// Minimum number of single-statement derivations from the state until the
/// conclusion is known, searching over states restricted to the space's
/// statements, depth-capped by config.max_depth. Memoized; safe to call
/// concurrently.
Distance distance(const SolutionSpace& space, const ProofState& state);

enum class EdgeReason { Ok, UnknownParent, Redundant, BadJustification };

std::string_view to_string(EdgeReason reason);

struct EdgeCheck {
  bool ok = false;
  EdgeReason reason = EdgeReason::BadJustification;
};

/// True iff the claimed parents are all known in the state, the claimed
/// statement is new, and the justification checks out.
EdgeCheck edge_exists(const SolutionSpace& space, const ProofState& state,
                      RuleId rule, const std::vector<Formula>& parents,
                      const Formula& statement);

/// Throws if an intermediate references an unknown parent, fails its
/// justification, or duplicates an earlier statement.
void validate_state(const ProofState& state, const SaturationConfig& cfg);

}  // namespace prooflab

#endif  // PROOFLAB_SOLUTION_SPACE_HPP
