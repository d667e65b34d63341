#include "prooflab/solution_space.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <queue>

namespace prooflab {

void validate_problem(const Problem& problem) {
  if (problem.premises.empty()) {
    throw InvalidProblemError("problem '" + problem.id + "' has no premises");
  }
  std::set<std::string> seen;
  for (const auto& p : problem.premises) {
    if (!seen.insert(p.str()).second) {
      throw InvalidProblemError("problem '" + problem.id +
                                "' has duplicate premise " + p.str());
    }
  }
}

std::vector<Formula> ProofState::known() const {
  std::vector<Formula> out = problem.premises;
  for (const auto& j : intermediates) out.push_back(j.statement);
  return out;
}

bool ProofState::contains(const Formula& f) const {
  for (const auto& p : problem.premises) {
    if (p == f) return true;
  }
  for (const auto& j : intermediates) {
    if (j.statement == f) return true;
  }
  return false;
}

std::set<RuleId> default_enabled_rules() {
  std::set<RuleId> out;
  for (RuleId r : all_rules()) out.insert(r);
  return out;
}

std::string_view to_string(EdgeReason reason) {
  switch (reason) {
    case EdgeReason::Ok:
      return "Ok";
    case EdgeReason::UnknownParent:
      return "UnknownParent";
    case EdgeReason::Redundant:
      return "Redundant";
    case EdgeReason::BadJustification:
      return "BadJustification";
  }
  return "?";
}

FormulaSet relevant_set(const Problem& problem, const SaturationConfig& cfg) {
  FormulaSet base;
  auto add_subs = [&base](const Formula& f) {
    for (const auto& s : subformulas(f)) base.insert(s);
  };
  for (const auto& p : problem.premises) add_subs(p);
  add_subs(problem.conclusion);

  FormulaSet out = base;
  if (cfg.relevant_closure_negation) {
    for (const auto& s : base) out.insert(Formula::negation(s));
  }
  FormulaSet filtered;
  for (const auto& s : out) {
    if (complexity(s, cfg.weights) <= cfg.max_complexity) filtered.insert(s);
  }
  return filtered;
}

// ---------------------------------------------------------------------------
// Saturation

struct SolutionSpace::Internals {
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> producers;  // statement -> edge ids
  std::vector<std::vector<int>> consumers;  // statement -> edge ids using it
  std::vector<char> goal_ancestor;          // statement feeds some derivation of C
  std::vector<int> goal_edges;              // edges whose result is a goal ancestor
  std::mutex cache_mu;
  std::unordered_map<std::string, Distance> distance_cache;
};

std::optional<int> SolutionSpace::index_of(const Formula& f) const {
  if (!internals) return std::nullopt;
  auto it = internals->index.find(f.str());
  if (it == internals->index.end()) return std::nullopt;
  return it->second;
}

void SolutionSpace::finalize() {
  auto in = std::make_shared<Internals>();
  const int n = static_cast<int>(statements.size());
  for (int i = 0; i < n; ++i) in->index[statements[i].str()] = i;
  in->producers.assign(n, {});
  in->consumers.assign(n, {});
  for (int e = 0; e < static_cast<int>(derivations.size()); ++e) {
    const auto& edge = derivations[e];
    in->producers[edge.result].push_back(e);
    int last = -1;
    for (int p : edge.parents) {
      if (p != last) in->consumers[p].push_back(e);
      last = p;
    }
  }
  // Backward closure from the conclusion: every statement that can feed a
  // derivation of it. Distance search never needs to step outside this set.
  in->goal_ancestor.assign(n, 0);
  auto cit = in->index.find(problem.conclusion.str());
  if (cit != in->index.end()) {
    std::deque<int> work{cit->second};
    in->goal_ancestor[cit->second] = 1;
    while (!work.empty()) {
      int s = work.front();
      work.pop_front();
      for (int e : in->producers[s]) {
        for (int p : derivations[e].parents) {
          if (!in->goal_ancestor[p]) {
            in->goal_ancestor[p] = 1;
            work.push_back(p);
          }
        }
      }
    }
    for (int e = 0; e < static_cast<int>(derivations.size()); ++e) {
      if (in->goal_ancestor[derivations[e].result]) {
        in->goal_edges.push_back(e);
      }
    }
  }
  internals = std::move(in);
}

namespace {

// Exact match preconditions for the two-parent deductive rules, mirroring
// apply_forward in both argument orders. Keeps the quadratic pairing loop
// from building formulas for pairs that cannot fire.
bool pair_could_fire(RuleId rule, const Formula& a, const Formula& b) {
  switch (rule) {
    case RuleId::MP:
      return (a.is_binary(Connective::Implies) && a.left() == b) ||
             (b.is_binary(Connective::Implies) && b.left() == a);
    case RuleId::MT:
      return (a.is_binary(Connective::Implies) && b.is_negation() &&
              b.body() == a.right()) ||
             (b.is_binary(Connective::Implies) && a.is_negation() &&
              a.body() == b.right());
    case RuleId::DS:
      return (a.is_binary(Connective::Or) && b.is_negation() &&
              (b.body() == a.left() || b.body() == a.right())) ||
             (b.is_binary(Connective::Or) && a.is_negation() &&
              (a.body() == b.left() || a.body() == b.right()));
    case RuleId::HS:
      return a.is_binary(Connective::Implies) &&
             b.is_binary(Connective::Implies) &&
             (a.right() == b.left() || b.right() == a.left());
    default:
      return true;
  }
}

int conjunction_complexity(const Formula& a, const Formula& b, int cxa,
                           int cxb, const ComplexityWeights& w) {
  int total = w.base_of(Op::And) + cxa + cxb;
  if (a.is_binary() || b.is_binary()) total += w.nest_of(Op::And);
  if (a.is_binary()) total += w.paren_unit;
  if (b.is_binary()) total += w.paren_unit;
  return total;
}

struct Saturator {
  const Problem& problem;
  const SaturationConfig& cfg;
  SolutionSpace space;

  std::unordered_map<std::string, int> index;
  std::vector<int> cx;
  std::vector<int> depth;
  std::set<std::string> edge_keys;
  std::unordered_map<std::string, std::vector<int>> impl_by_antecedent;
  std::unordered_map<std::string, std::vector<int>> disj_by_left;
  std::unordered_map<std::string, std::vector<int>> disj_by_right;
  std::deque<int> pending;
  bool stop = false;

  explicit Saturator(const Problem& p, const SaturationConfig& c)
      : problem(p), cfg(c) {
    space.problem = p;
    space.config = c;
    space.relevant = relevant_set(p, c);
  }

  int find(const Formula& f) const {
    auto it = index.find(f.str());
    return it == index.end() ? -1 : it->second;
  }

  int admit(const Formula& f, int d) {
    int i = find(f);
    if (i >= 0) return i;
    if (d > cfg.max_depth) {
      space.saturation_complete = false;
      return -1;
    }
    if (static_cast<int>(space.statements.size()) >= cfg.max_statements) {
      space.saturation_complete = false;
      stop = true;
      return -1;
    }
    i = static_cast<int>(space.statements.size());
    space.statements.push_back(f);
    index[f.str()] = i;
    cx.push_back(complexity(f, cfg.weights));
    depth.push_back(d);
    pending.push_back(i);
    if (f.is_binary(Connective::Implies)) {
      impl_by_antecedent[f.left().str()].push_back(i);
    } else if (f.is_binary(Connective::Or)) {
      disj_by_left[f.left().str()].push_back(i);
      disj_by_right[f.right().str()].push_back(i);
    }
    return i;
  }

  void record(const Formula& result, RuleId rule, std::vector<int> parents) {
    if (complexity(result, cfg.weights) > cfg.max_complexity) return;
    int d = 0;
    for (int p : parents) d = std::max(d, depth[p]);
    int i = admit(result, d + 1);
    if (i < 0) return;
    std::sort(parents.begin(), parents.end());
    std::string key = std::to_string(static_cast<int>(rule));
    for (int p : parents) key += ":" + std::to_string(p);
    key += ">" + std::to_string(i);
    if (edge_keys.insert(std::move(key)).second) {
      space.derivations.push_back({i, rule, std::move(parents)});
    }
  }

  void apply_and_record(RuleId rule, const std::vector<Formula>& parents,
                        std::vector<int> parent_idx) {
    for (const auto& r :
         apply_forward(rule, parents, space.relevant, cfg.rule_options)) {
      record(r, rule, parent_idx);
      if (stop) return;
    }
  }

  void process(int k) {
    const Formula fk = space.statements[k];
    for (RuleId rule : cfg.enabled_rules) {
      if (stop) return;
      const int arity = rule_arity(rule);
      if (arity == 1) {
        apply_and_record(rule, {fk}, {k});
        continue;
      }
      if (arity == 2) {
        for (int j = 0; j <= k && !stop; ++j) {
          const Formula fj = space.statements[j];
          if (rule == RuleId::Conj) {
            if (j == k && !cfg.rule_options.allow_self_conjunction) continue;
            if (conjunction_complexity(fj, fk, cx[j], cx[k], cfg.weights) >
                cfg.max_complexity) {
              continue;
            }
          } else if (!pair_could_fire(rule, fj, fk)) {
            continue;
          }
          apply_and_record(rule, {fj, fk}, {j, k});
        }
        continue;
      }
      // CD: enumerate triples through the implication/disjunction indexes.
      // Admissions grow these indexes mid-loop, so iterate over snapshots;
      // statements admitted now enumerate their own combinations later.
      auto snapshot = [](const std::unordered_map<std::string,
                                                  std::vector<int>>& map,
                         const std::string& key) {
        auto it = map.find(key);
        return it == map.end() ? std::vector<int>{} : it->second;
      };
      if (fk.is_binary(Connective::Implies)) {
        const std::string ant = fk.left().str();
        for (int d : snapshot(disj_by_left, ant)) {
          const Formula disj = space.statements[d];
          for (int m : snapshot(impl_by_antecedent, disj.right().str())) {
            const Formula other = space.statements[m];
            apply_and_record(RuleId::CD, {fk, other, disj}, {k, m, d});
            if (stop) return;
          }
        }
        for (int d : snapshot(disj_by_right, ant)) {
          const Formula disj = space.statements[d];
          for (int m : snapshot(impl_by_antecedent, disj.left().str())) {
            const Formula other = space.statements[m];
            apply_and_record(RuleId::CD, {other, fk, disj}, {m, k, d});
            if (stop) return;
          }
        }
      } else if (fk.is_binary(Connective::Or)) {
        for (int a : snapshot(impl_by_antecedent, fk.left().str())) {
          const Formula left_impl = space.statements[a];
          for (int b : snapshot(impl_by_antecedent, fk.right().str())) {
            const Formula right_impl = space.statements[b];
            apply_and_record(RuleId::CD, {left_impl, right_impl, fk},
                             {a, b, k});
            if (stop) return;
          }
        }
      }
    }
  }

  SolutionSpace run() {
    for (const auto& p : problem.premises) {
      int i = static_cast<int>(space.statements.size());
      space.statements.push_back(p);
      index[p.str()] = i;
      cx.push_back(complexity(p, cfg.weights));
      depth.push_back(0);
      pending.push_back(i);
      if (p.is_binary(Connective::Implies)) {
        impl_by_antecedent[p.left().str()].push_back(i);
      } else if (p.is_binary(Connective::Or)) {
        disj_by_left[p.left().str()].push_back(i);
        disj_by_right[p.right().str()].push_back(i);
      }
    }
    while (!pending.empty() && !stop) {
      int k = pending.front();
      pending.pop_front();
      process(k);
    }
    space.finalize();
    return std::move(space);
  }
};

}  // namespace

SolutionSpace saturate(const Problem& problem, const SaturationConfig& cfg) {
  validate_problem(problem);
  Saturator sat(problem, cfg);
  return sat.run();
}

// ---------------------------------------------------------------------------
// Distance

namespace {

std::string state_key(const std::vector<int>& sorted_idx) {
  std::string key;
  for (int i : sorted_idx) {
    key += std::to_string(i);
    key += ',';
  }
  return key;
}

constexpr int kUnreachableLevel = std::numeric_limits<int>::max();

// Rounds of maximally parallel derivation until the conclusion appears.
// Admissible lower bound on the serial distance.
int level_heuristic(const SolutionSpace& space, const std::vector<char>& have,
                    int conclusion_idx) {
  const auto& in = *space.internals;
  std::vector<char> reach = have;
  if (reach[conclusion_idx]) return 0;
  for (int round = 1;; ++round) {
    std::vector<int> newly;
    for (int e : in.goal_edges) {
      const auto& edge = space.derivations[e];
      if (reach[edge.result]) continue;
      bool ready = true;
      for (int p : edge.parents) {
        if (!reach[p]) {
          ready = false;
          break;
        }
      }
      if (ready) newly.push_back(edge.result);
    }
    if (newly.empty()) return kUnreachableLevel;
    for (int s : newly) {
      if (s == conclusion_idx) return round;
      reach[s] = 1;
    }
  }
}

}  // namespace

Distance distance(const SolutionSpace& space, const ProofState& state) {
  if (!space.internals) {
    throw Error("solution space not finalized");
  }
  if (state.problem.premises.size() != space.problem.premises.size()) {
    throw Error("state does not belong to the space's problem");
  }
  for (std::size_t i = 0; i < state.problem.premises.size(); ++i) {
    if (state.problem.premises[i] != space.problem.premises[i]) {
      throw Error("state does not belong to the space's problem");
    }
  }

  const Formula& conclusion = space.problem.conclusion;
  if (state.contains(conclusion)) return Distance::finite_at(0);

  auto unreachable = [&] {
    return space.saturation_complete ? Distance::unreachable_proven()
                                     : Distance::unreachable_cap();
  };

  auto concl_idx = space.index_of(conclusion);
  if (!concl_idx) return unreachable();

  const int n = static_cast<int>(space.statements.size());
  std::vector<char> known(n, 0);
  std::vector<int> known_sorted;
  for (const auto& f : state.known()) {
    if (auto idx = space.index_of(f)) {
      if (!known[*idx]) {
        known[*idx] = 1;
        known_sorted.push_back(*idx);
      }
    }
    // Statements outside the space are inert: nothing derives from them.
  }
  std::sort(known_sorted.begin(), known_sorted.end());

  auto& in = *space.internals;
  const std::string key = state_key(known_sorted);
  {
    std::lock_guard<std::mutex> lock(in.cache_mu);
    auto it = in.distance_cache.find(key);
    if (it != in.distance_cache.end()) return it->second;
  }

  auto memo = [&](Distance d) {
    std::lock_guard<std::mutex> lock(in.cache_mu);
    in.distance_cache.emplace(key, d);
    return d;
  };

  // Reachability first, so provably-unreachable is separated from the
  // depth cap.
  {
    std::vector<char> reach = known;
    std::vector<int> need(space.derivations.size(), 0);
    std::deque<int> work;
    for (std::size_t e = 0; e < space.derivations.size(); ++e) {
      int last = -1;
      for (int p : space.derivations[e].parents) {
        if (p != last && !reach[p]) ++need[e];
        last = p;
      }
      if (need[e] == 0) work.push_back(static_cast<int>(e));
    }
    std::vector<char> fired(space.derivations.size(), 0);
    std::deque<int> stmts;
    auto fire_ready = [&](int e) {
      if (!fired[e] && need[e] == 0) {
        fired[e] = 1;
        int r = space.derivations[e].result;
        if (!reach[r]) {
          reach[r] = 1;
          stmts.push_back(r);
        }
      }
    };
    for (int e : work) fire_ready(e);
    while (!stmts.empty()) {
      int s = stmts.front();
      stmts.pop_front();
      for (int e : in.consumers[s]) {
        if (--need[e] == 0) fire_ready(e);
      }
    }
    if (!reach[*concl_idx]) return memo(unreachable());
  }

  // A* over sets of newly derived goal-ancestor statements. g counts serial
  // derivation steps; h is the parallel-round lower bound, so the first goal
  // expansion is optimal.
  struct NodeInfo {
    std::vector<int> derived;
    int g;
  };
  std::map<std::string, NodeInfo> nodes;
  std::set<std::pair<int, std::string>> open;  // (f, node key)

  std::vector<char> have = known;
  const int h0 = level_heuristic(space, have, *concl_idx);
  if (h0 == kUnreachableLevel) return memo(unreachable());
  nodes.emplace("", NodeInfo{{}, 0});
  open.emplace(h0, "");

  while (!open.empty()) {
    auto [f, nkey] = *open.begin();
    open.erase(open.begin());
    const NodeInfo node = nodes.at(nkey);

    std::vector<char> current = known;
    bool done = false;
    for (int s : node.derived) {
      current[s] = 1;
      if (s == *concl_idx) done = true;
    }
    if (done) return memo(Distance::finite_at(node.g));
    if (node.g >= space.config.max_depth) continue;

    for (int e : in.goal_edges) {
      const auto& edge = space.derivations[e];
      if (current[edge.result]) continue;
      bool ready = true;
      for (int p : edge.parents) {
        if (!current[p]) {
          ready = false;
          break;
        }
      }
      if (!ready) continue;

      std::vector<int> next = node.derived;
      next.insert(std::upper_bound(next.begin(), next.end(), edge.result),
                  edge.result);
      std::string next_key = state_key(next);
      auto it = nodes.find(next_key);
      const int g = node.g + 1;
      if (it != nodes.end() && it->second.g <= g) continue;

      current[edge.result] = 1;
      const int h = level_heuristic(space, current, *concl_idx);
      current[edge.result] = 0;
      if (h == kUnreachableLevel) continue;
      if (it != nodes.end()) {
        open.erase({it->second.g + h, next_key});
        it->second.g = g;
        it->second.derived = next;
      } else {
        nodes.emplace(next_key, NodeInfo{std::move(next), g});
      }
      open.emplace(g + h, next_key);
    }
  }
  // Reachable, but only beyond the depth cap.
  return memo(Distance::unreachable_cap());
}

// ---------------------------------------------------------------------------
// Edge checking and state validation

EdgeCheck edge_exists(const SolutionSpace& space, const ProofState& state,
                      RuleId rule, const std::vector<Formula>& parents,
                      const Formula& statement) {
  std::set<std::string> known;
  for (const auto& f : state.known()) known.insert(f.str());
  for (const auto& p : parents) {
    if (known.count(p.str()) == 0) return {false, EdgeReason::UnknownParent};
  }
  if (known.count(statement.str()) > 0) return {false, EdgeReason::Redundant};
  auto check = check_justification(rule, parents, statement, space.relevant,
                                   space.config.rule_options);
  if (!check.valid) return {false, EdgeReason::BadJustification};
  return {true, EdgeReason::Ok};
}

void validate_state(const ProofState& state, const SaturationConfig& cfg) {
  validate_problem(state.problem);
  const FormulaSet candidates = relevant_set(state.problem, cfg);
  std::set<std::string> known;
  for (const auto& p : state.problem.premises) known.insert(p.str());
  for (std::size_t i = 0; i < state.intermediates.size(); ++i) {
    const auto& j = state.intermediates[i];
    for (const auto& p : j.parents) {
      if (known.count(p.str()) == 0) {
        throw Error("intermediate " + std::to_string(i + 1) +
                    " references unknown parent " + p.str());
      }
    }
    if (known.count(j.statement.str()) > 0) {
      throw Error("intermediate " + std::to_string(i + 1) +
                  " duplicates statement " + j.statement.str());
    }
    auto check = check_justification(j.rule, j.parents, j.statement,
                                     candidates, cfg.rule_options);
    if (!check.valid) {
      throw Error("intermediate " + std::to_string(i + 1) + " (" +
                  j.statement.str() + " by " +
                  std::string(rule_short_name(j.rule)) +
                  ") fails justification: " +
                  std::string(to_string(check.failure)));
    }
    known.insert(j.statement.str());
  }
}

}  // namespace prooflab
