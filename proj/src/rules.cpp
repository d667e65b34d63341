#include "prooflab/rules.hpp"

#include <algorithm>
#include <array>
#include <functional>

namespace prooflab {

namespace {

struct RuleInfo {
  RuleId id;
  std::string_view short_name;
  std::string_view long_name;
  RuleKind kind;
  int arity;
};

constexpr std::array<RuleInfo, kRuleCount> kRules{{
    {RuleId::MP, "MP", "Modus Ponens", RuleKind::Deductive, 2},
    {RuleId::MT, "MT", "Modus Tollens", RuleKind::Deductive, 2},
    {RuleId::Conj, "Conj", "Conjunction", RuleKind::Deductive, 2},
    {RuleId::Simp, "Simp", "Simplification", RuleKind::Deductive, 1},
    {RuleId::Add, "Add", "Addition", RuleKind::Deductive, 1},
    {RuleId::DS, "DS", "Disjunctive Syllogism", RuleKind::Deductive, 2},
    {RuleId::HS, "HS", "Hypothetical Syllogism", RuleKind::Deductive, 2},
    {RuleId::Impl, "Impl", "Implication", RuleKind::Replacement, 1},
    {RuleId::DN, "DN", "Double Negation", RuleKind::Replacement, 1},
    {RuleId::CP, "CP", "Contraposition", RuleKind::Replacement, 1},
    {RuleId::Com, "Com", "Commutation", RuleKind::Replacement, 1},
    {RuleId::Assoc, "Assoc", "Associativity", RuleKind::Replacement, 1},
    {RuleId::Dist, "Dist", "Distribution", RuleKind::Replacement, 1},
    {RuleId::CD, "CD", "Constructive Dilemma", RuleKind::Deductive, 3},
    {RuleId::Equiv, "Equiv", "Equivalence", RuleKind::Replacement, 1},
    {RuleId::DeM, "DeM", "De Morgan's Law", RuleKind::Replacement, 1},
}};

const RuleInfo& info(RuleId rule) {
  for (const auto& r : kRules) {
    if (r.id == rule) return r;
  }
  return kRules[0];
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

ArityMismatchError::ArityMismatchError(RuleId rule, std::size_t given)
    : Error(std::string(rule_short_name(rule)) + " takes " +
            std::to_string(rule_arity(rule)) + " parents, got " +
            std::to_string(given)),
      rule_(rule) {}

std::string_view rule_short_name(RuleId rule) { return info(rule).short_name; }
std::string_view rule_long_name(RuleId rule) { return info(rule).long_name; }
RuleKind rule_kind(RuleId rule) { return info(rule).kind; }
int rule_arity(RuleId rule) { return info(rule).arity; }

std::optional<RuleId> rule_from_name(std::string_view name) {
  std::string needle = lower(name);
  for (const auto& r : kRules) {
    if (lower(r.short_name) == needle) return r.id;
  }
  return std::nullopt;
}

std::vector<RuleId> all_rules() {
  std::vector<RuleId> out;
  out.reserve(kRuleCount);
  for (const auto& r : kRules) out.push_back(r.id);
  return out;
}

std::string_view to_string(JustificationFailure f) {
  switch (f) {
    case JustificationFailure::ArityMismatch:
      return "ArityMismatch";
    case JustificationFailure::PatternMismatch:
      return "PatternMismatch";
    case JustificationFailure::ResultMismatch:
      return "ResultMismatch";
  }
  return "?";
}

namespace {

using LocalRewrite = std::function<void(const Formula&, std::vector<Formula>&)>;

// Applies `local` at every subformula occurrence of f, returning the whole
// formula rebuilt around each rewrite.
std::vector<Formula> rewrite_positions(const Formula& f,
                                       const LocalRewrite& local) {
  std::vector<Formula> results;
  local(f, results);
  if (f.is_negation()) {
    for (const auto& b : rewrite_positions(f.body(), local)) {
      results.push_back(Formula::negation(b));
    }
  } else if (f.is_binary()) {
    for (const auto& l : rewrite_positions(f.left(), local)) {
      results.push_back(Formula::binary(f.connective(), l, f.right()));
    }
    for (const auto& r : rewrite_positions(f.right(), local)) {
      results.push_back(Formula::binary(f.connective(), f.left(), r));
    }
  }
  return results;
}

LocalRewrite local_rewrite_for(RuleId rule, const RuleOptions& opts) {
  switch (rule) {
    case RuleId::Impl:
      return [](const Formula& f, std::vector<Formula>& out) {
        if (f.is_binary(Connective::Implies)) {
          out.push_back(
              Formula::disj(Formula::negation(f.left()), f.right()));
        }
        if (f.is_binary(Connective::Or) && f.left().is_negation()) {
          out.push_back(Formula::implies(f.left().body(), f.right()));
        }
      };
    case RuleId::DN:
      return [](const Formula& f, std::vector<Formula>& out) {
        out.push_back(Formula::negation(Formula::negation(f)));
        if (f.is_negation() && f.body().is_negation()) {
          out.push_back(f.body().body());
        }
      };
    case RuleId::CP:
      return [](const Formula& f, std::vector<Formula>& out) {
        if (!f.is_binary(Connective::Implies)) return;
        out.push_back(Formula::implies(Formula::negation(f.right()),
                                       Formula::negation(f.left())));
        if (f.left().is_negation() && f.right().is_negation()) {
          out.push_back(
              Formula::implies(f.right().body(), f.left().body()));
        }
      };
    case RuleId::Com:
      return [opts](const Formula& f, std::vector<Formula>& out) {
        if (f.is_binary(Connective::Or) ||
            (opts.com_assoc_on_and && f.is_binary(Connective::And))) {
          out.push_back(Formula::binary(f.connective(), f.right(), f.left()));
        }
      };
    case RuleId::Assoc:
      return [opts](const Formula& f, std::vector<Formula>& out) {
        auto emit = [&](Connective c) {
          if (f.left().is_binary(c)) {
            out.push_back(Formula::binary(
                c, f.left().left(),
                Formula::binary(c, f.left().right(), f.right())));
          }
          if (f.right().is_binary(c)) {
            out.push_back(Formula::binary(
                c, Formula::binary(c, f.left(), f.right().left()),
                f.right().right()));
          }
        };
        if (f.is_binary(Connective::Or)) emit(Connective::Or);
        if (opts.com_assoc_on_and && f.is_binary(Connective::And)) {
          emit(Connective::And);
        }
      };
    case RuleId::Dist:
      return [opts](const Formula& f, std::vector<Formula>& out) {
        // P ∧ (Q ∨ R) ≡ (P ∧ Q) ∨ (P ∧ R)
        if (f.is_binary(Connective::And) &&
            f.right().is_binary(Connective::Or)) {
          out.push_back(Formula::disj(
              Formula::conj(f.left(), f.right().left()),
              Formula::conj(f.left(), f.right().right())));
        }
        if (f.is_binary(Connective::Or) &&
            f.left().is_binary(Connective::And) &&
            f.right().is_binary(Connective::And) &&
            f.left().left() == f.right().left()) {
          out.push_back(Formula::conj(
              f.left().left(),
              Formula::disj(f.left().right(), f.right().right())));
        }
        if (opts.distribute_dual) {
          if (f.is_binary(Connective::Or) &&
              f.right().is_binary(Connective::And)) {
            out.push_back(Formula::conj(
                Formula::disj(f.left(), f.right().left()),
                Formula::disj(f.left(), f.right().right())));
          }
          if (f.is_binary(Connective::And) &&
              f.left().is_binary(Connective::Or) &&
              f.right().is_binary(Connective::Or) &&
              f.left().left() == f.right().left()) {
            out.push_back(Formula::disj(
                f.left().left(),
                Formula::conj(f.left().right(), f.right().right())));
          }
        }
      };
    case RuleId::Equiv:
      return [](const Formula& f, std::vector<Formula>& out) {
        if (f.is_binary(Connective::Iff)) {
          out.push_back(
              Formula::conj(Formula::implies(f.left(), f.right()),
                            Formula::implies(f.right(), f.left())));
        }
        if (f.is_binary(Connective::And) &&
            f.left().is_binary(Connective::Implies) &&
            f.right().is_binary(Connective::Implies) &&
            f.left().left() == f.right().right() &&
            f.left().right() == f.right().left()) {
          out.push_back(Formula::iff(f.left().left(), f.left().right()));
        }
      };
    case RuleId::DeM:
      return [](const Formula& f, std::vector<Formula>& out) {
        if (f.is_negation() && f.body().is_binary(Connective::And)) {
          out.push_back(
              Formula::disj(Formula::negation(f.body().left()),
                            Formula::negation(f.body().right())));
        }
        if (f.is_negation() && f.body().is_binary(Connective::Or)) {
          out.push_back(
              Formula::conj(Formula::negation(f.body().left()),
                            Formula::negation(f.body().right())));
        }
        if (f.is_binary(Connective::Or) && f.left().is_negation() &&
            f.right().is_negation()) {
          out.push_back(Formula::negation(
              Formula::conj(f.left().body(), f.right().body())));
        }
        if (f.is_binary(Connective::And) && f.left().is_negation() &&
            f.right().is_negation()) {
          out.push_back(Formula::negation(
              Formula::disj(f.left().body(), f.right().body())));
        }
      };
    default:
      return [](const Formula&, std::vector<Formula>&) {};
  }
}

void apply_deductive_ordered(RuleId rule, const std::vector<Formula>& ps,
                             const FormulaSet& candidates,
                             const RuleOptions& opts, FormulaSet& out) {
  switch (rule) {
    case RuleId::MP:
      if (ps[0].is_binary(Connective::Implies) && ps[0].left() == ps[1]) {
        out.insert(ps[0].right());
      }
      break;
    case RuleId::MT:
      if (ps[0].is_binary(Connective::Implies) && ps[1].is_negation() &&
          ps[1].body() == ps[0].right()) {
        out.insert(Formula::negation(ps[0].left()));
      }
      break;
    case RuleId::Conj:
      if (ps[0] == ps[1] && !opts.allow_self_conjunction) break;
      out.insert(Formula::conj(ps[0], ps[1]));
      break;
    case RuleId::Simp:
      if (ps[0].is_binary(Connective::And)) {
        out.insert(ps[0].left());
        out.insert(ps[0].right());
      }
      break;
    case RuleId::Add:
      for (const auto& q : candidates) {
        out.insert(Formula::disj(ps[0], q));
      }
      break;
    case RuleId::DS:
      if (ps[0].is_binary(Connective::Or) && ps[1].is_negation()) {
        if (ps[1].body() == ps[0].left()) out.insert(ps[0].right());
        if (ps[1].body() == ps[0].right()) out.insert(ps[0].left());
      }
      break;
    case RuleId::HS:
      if (ps[0].is_binary(Connective::Implies) &&
          ps[1].is_binary(Connective::Implies) &&
          ps[0].right() == ps[1].left()) {
        out.insert(Formula::implies(ps[0].left(), ps[1].right()));
      }
      break;
    case RuleId::CD:
      // (P → Q), (R → S), (P ∨ R)  ⇒  Q ∨ S
      if (ps[0].is_binary(Connective::Implies) &&
          ps[1].is_binary(Connective::Implies) &&
          ps[2].is_binary(Connective::Or) && ps[2].left() == ps[0].left() &&
          ps[2].right() == ps[1].left()) {
        out.insert(Formula::disj(ps[0].right(), ps[1].right()));
      }
      break;
    default:
      break;
  }
}

}  // namespace

FormulaSet apply_forward(RuleId rule, const std::vector<Formula>& parents,
                         const FormulaSet& candidates,
                         const RuleOptions& opts) {
  const std::size_t arity = static_cast<std::size_t>(rule_arity(rule));
  if (parents.size() != arity) {
    throw ArityMismatchError(rule, parents.size());
  }

  FormulaSet out;
  if (rule_kind(rule) == RuleKind::Replacement) {
    const LocalRewrite local = local_rewrite_for(rule, opts);
    for (const auto& g : rewrite_positions(parents[0], local)) {
      out.insert(g);
    }
    return out;
  }

  // Deductive rules: parent order is insignificant, so try every ordering.
  switch (arity) {
    case 1:
      apply_deductive_ordered(rule, parents, candidates, opts, out);
      break;
    case 2: {
      apply_deductive_ordered(rule, {parents[0], parents[1]}, candidates, opts,
                              out);
      apply_deductive_ordered(rule, {parents[1], parents[0]}, candidates, opts,
                              out);
      break;
    }
    case 3: {
      std::array<int, 3> idx{0, 1, 2};
      std::sort(idx.begin(), idx.end());
      do {
        apply_deductive_ordered(
            rule, {parents[idx[0]], parents[idx[1]], parents[idx[2]]},
            candidates, opts, out);
      } while (std::next_permutation(idx.begin(), idx.end()));
      break;
    }
    default:
      break;
  }
  return out;
}

JustificationResult check_justification(RuleId rule,
                                        const std::vector<Formula>& parents,
                                        const Formula& claimed,
                                        const FormulaSet& candidates,
                                        const RuleOptions& opts) {
  if (parents.size() != static_cast<std::size_t>(rule_arity(rule))) {
    return JustificationResult::invalid(JustificationFailure::ArityMismatch);
  }
  FormulaSet results = apply_forward(rule, parents, candidates, opts);
  if (results.count(claimed) > 0) return JustificationResult::ok();
  if (rule_kind(rule) == RuleKind::Replacement || results.empty()) {
    return JustificationResult::invalid(JustificationFailure::PatternMismatch);
  }
  return JustificationResult::invalid(JustificationFailure::ResultMismatch);
}

bool soundness_oracle(RuleId rule, const std::vector<Formula>& parents,
                      const Formula& derived) {
  std::set<char> names = atoms(derived);
  for (const auto& p : parents) {
    auto pa = atoms(p);
    names.insert(pa.begin(), pa.end());
  }
  if (names.size() > 12) throw TooManyAtomsError(names.size());

  const std::vector<char> order(names.begin(), names.end());
  const std::size_t total = std::size_t{1} << order.size();
  const bool need_equivalence =
      rule_kind(rule) == RuleKind::Replacement && parents.size() == 1;

  for (std::size_t mask = 0; mask < total; ++mask) {
    std::map<char, bool> assignment;
    for (std::size_t i = 0; i < order.size(); ++i) {
      assignment[order[i]] = (mask >> i) & 1;
    }
    bool all_parents = true;
    for (const auto& p : parents) {
      if (!evaluate(p, assignment)) {
        all_parents = false;
        break;
      }
    }
    const bool d = evaluate(derived, assignment);
    if (all_parents && !d) return false;
    if (need_equivalence && evaluate(parents[0], assignment) != d) {
      return false;
    }
  }
  return true;
}

}  // namespace prooflab
