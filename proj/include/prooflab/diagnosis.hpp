#ifndef PROOFLAB_DIAGNOSIS_HPP
#define PROOFLAB_DIAGNOSIS_HPP

#include <optional>
#include <string>
#include <string_view>

#include "prooflab/solution_space.hpp"

namespace prooflab {

/// A proposed next step: the student simulator's output once parsed.
struct StepClaim {
  Formula statement = Formula::atom('A');
  RuleId rule = RuleId::MP;
  std::vector<Formula> parents;
  std::optional<std::string> candidates_text;
  std::optional<std::string> reasoning_text;
};

enum class DiagLabel { Optimal, ValidAlternative, Incorrect, Indeterminate };

enum class DiagReason {
  DistanceReduced,
  DistanceUnchanged,
  UnknownParent,
  Redundant,
  BadJustification,
  CapLimited,
};

struct Diagnosis {
  DiagLabel label = DiagLabel::Indeterminate;
  DiagReason reason = DiagReason::CapLimited;
  std::optional<int> d_before;
  std::optional<int> d_after;
};

std::string_view to_string(DiagLabel label);
std::string_view to_string(DiagReason reason);
std::optional<DiagLabel> label_from_string(std::string_view text);

/// Three-way ground truth for a claim against the knowledge graph: Incorrect
/// when the claim is not an edge, Optimal when a valid edge reduces the
/// distance to the conclusion by one, ValidAlternative when it leaves it
/// unchanged. Indeterminate when a tripped cap makes the distance untrusted.
Diagnosis classify(const SolutionSpace& space, const ProofState& state,
                   const StepClaim& claim);

EdgeCheck edge_exists(const SolutionSpace& space, const ProofState& state,
                      const StepClaim& claim);

/// Maps an agent's NEXT_STEP_CORRECTNESS value onto the three-way scheme:
/// Correct -> Optimal, Suboptimal -> ValidAlternative, Incorrect ->
/// Incorrect, case-insensitively; body-text spellings Optimal and
/// Valid-Alternative are accepted too. nullopt signals a parse failure and
/// must be counted by the caller.
std::optional<DiagLabel> map_agent_label(std::string_view raw);

}  // namespace prooflab

#endif  // PROOFLAB_DIAGNOSIS_HPP
