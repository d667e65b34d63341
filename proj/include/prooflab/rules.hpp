#ifndef PROOFLAB_RULES_HPP
#define PROOFLAB_RULES_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "prooflab/formula.hpp"

namespace prooflab {

// The tutor's rule set. The first 15 are the published table; DeM is the
// De Morgan replacement the worked examples rely on.
enum class RuleId {
  MP,
  MT,
  Conj,
  Simp,
  Add,
  DS,
  HS,
  Impl,
  DN,
  CP,
  Com,
  Assoc,
  Dist,
  CD,
  Equiv,
  DeM,
};

inline constexpr int kRuleCount = 16;

enum class RuleKind { Deductive, Replacement };

struct RuleOptions {
  bool com_assoc_on_and = true;     // Com/Assoc over ∧ as well as ∨
  bool distribute_dual = false;     // ∨-over-∧ form of Dist
  bool allow_self_conjunction = false;  // Conj on identical parents
};

class ArityMismatchError : public Error {
 public:
  ArityMismatchError(RuleId rule, std::size_t given);
  RuleId rule() const { return rule_; }

 private:
  RuleId rule_;
};

class TooManyAtomsError : public Error {
 public:
  explicit TooManyAtomsError(std::size_t count)
      : Error("soundness oracle limited to 12 atoms, got " +
              std::to_string(count)) {}
};

std::string_view rule_short_name(RuleId rule);
std::string_view rule_long_name(RuleId rule);
std::optional<RuleId> rule_from_name(std::string_view name);
RuleKind rule_kind(RuleId rule);
int rule_arity(RuleId rule);
std::vector<RuleId> all_rules();

/// Every statement derivable from exactly these parents by one application
/// of the rule. Parent order is insignificant: all argument orderings are
/// tried. Replacement rules rewrite at any single subformula occurrence, in
/// either direction. Add introduces one disjunct per member of `candidates`;
/// DN expansion results are unbounded here and capped by the saturation
/// layer. Returns the empty set on pattern mismatch.
FormulaSet apply_forward(RuleId rule, const std::vector<Formula>& parents,
                         const FormulaSet& candidates,
                         const RuleOptions& opts = {});

enum class JustificationFailure { ArityMismatch, PatternMismatch, ResultMismatch };

struct JustificationResult {
  bool valid = false;
  JustificationFailure failure = JustificationFailure::PatternMismatch;

  static JustificationResult ok() { return {true, {}}; }
  static JustificationResult invalid(JustificationFailure f) {
    return {false, f};
  }
};

std::string_view to_string(JustificationFailure f);

/// Valid iff `claimed` is derivable from the given parents by one
/// application of `rule`. PatternMismatch means the rule does not connect
/// these parents to the claim at all (for replacement rules, any
/// non-membership); ResultMismatch means a deductive rule fired on the
/// parents but produced something else.
JustificationResult check_justification(RuleId rule,
                                        const std::vector<Formula>& parents,
                                        const Formula& claimed,
                                        const FormulaSet& candidates,
                                        const RuleOptions& opts = {});

/// Truth-table check that the parents semantically entail `derived`; for
/// replacement rules the rewrite must additionally be equivalent to its
/// single source. Throws TooManyAtomsError above 12 distinct atoms.
bool soundness_oracle(RuleId rule, const std::vector<Formula>& parents,
                      const Formula& derived);

}  // namespace prooflab

#endif  // PROOFLAB_RULES_HPP
