#include "prooflab/diagnosis.hpp"

#include <algorithm>
#include <cctype>

namespace prooflab {

std::string_view to_string(DiagLabel label) {
  switch (label) {
    case DiagLabel::Optimal:
      return "Optimal";
    case DiagLabel::ValidAlternative:
      return "ValidAlternative";
    case DiagLabel::Incorrect:
      return "Incorrect";
    case DiagLabel::Indeterminate:
      return "Indeterminate";
  }
  return "?";
}

std::string_view to_string(DiagReason reason) {
  switch (reason) {
    case DiagReason::DistanceReduced:
      return "DistanceReduced";
    case DiagReason::DistanceUnchanged:
      return "DistanceUnchanged";
    case DiagReason::UnknownParent:
      return "UnknownParent";
    case DiagReason::Redundant:
      return "Redundant";
    case DiagReason::BadJustification:
      return "BadJustification";
    case DiagReason::CapLimited:
      return "CapLimited";
  }
  return "?";
}

std::optional<DiagLabel> label_from_string(std::string_view text) {
  if (text == "Optimal") return DiagLabel::Optimal;
  if (text == "ValidAlternative") return DiagLabel::ValidAlternative;
  if (text == "Incorrect") return DiagLabel::Incorrect;
  if (text == "Indeterminate") return DiagLabel::Indeterminate;
  return std::nullopt;
}

EdgeCheck edge_exists(const SolutionSpace& space, const ProofState& state,
                      const StepClaim& claim) {
  return edge_exists(space, state, claim.rule, claim.parents, claim.statement);
}

Diagnosis classify(const SolutionSpace& space, const ProofState& state,
                   const StepClaim& claim) {
  const EdgeCheck edge = edge_exists(space, state, claim);
  const Distance before = distance(space, state);
  std::optional<int> d_before;
  if (before.finite()) d_before = before.steps;

  if (!edge.ok) {
    DiagReason reason = DiagReason::BadJustification;
    switch (edge.reason) {
      case EdgeReason::UnknownParent:
        reason = DiagReason::UnknownParent;
        break;
      case EdgeReason::Redundant:
        reason = DiagReason::Redundant;
        break;
      default:
        break;
    }
    return {DiagLabel::Incorrect, reason, d_before, std::nullopt};
  }

  if (before.kind == Distance::Kind::UnreachableCap) {
    return {DiagLabel::Indeterminate, DiagReason::CapLimited, std::nullopt,
            std::nullopt};
  }
  // A statement the truncated space never enumerated: its onward
  // derivations are unknown, so the distance after it is untrusted.
  if (!space.index_of(claim.statement) && !space.saturation_complete) {
    return {DiagLabel::Indeterminate, DiagReason::CapLimited, d_before,
            std::nullopt};
  }

  ProofState after = state;
  after.intermediates.push_back({claim.statement, claim.rule, claim.parents});
  const Distance post = distance(space, after);
  if (post.kind == Distance::Kind::UnreachableCap) {
    return {DiagLabel::Indeterminate, DiagReason::CapLimited, d_before,
            std::nullopt};
  }
  if (before.kind == Distance::Kind::UnreachableProven) {
    // Valid step in an unsolvable state: nothing to reduce.
    return {DiagLabel::ValidAlternative, DiagReason::DistanceUnchanged,
            std::nullopt, std::nullopt};
  }

  std::optional<int> d_after;
  if (post.finite()) d_after = post.steps;
  if (d_after && *d_after == before.steps - 1) {
    return {DiagLabel::Optimal, DiagReason::DistanceReduced, d_before,
            d_after};
  }
  return {DiagLabel::ValidAlternative, DiagReason::DistanceUnchanged, d_before,
          d_after};
}

std::optional<DiagLabel> map_agent_label(std::string_view raw) {
  std::string norm;
  norm.reserve(raw.size());
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      norm.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (norm == "correct" || norm == "optimal") return DiagLabel::Optimal;
  if (norm == "suboptimal" || norm == "validalternative") {
    return DiagLabel::ValidAlternative;
  }
  if (norm == "incorrect") return DiagLabel::Incorrect;
  return std::nullopt;
}

}  // namespace prooflab
