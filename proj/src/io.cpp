#include "prooflab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prooflab/hash.hpp"

namespace prooflab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path, std::string("invalid JSON: ") + e.what());
  }
}

Formula parse_formula(const json& value, const std::string& ctx) {
  if (!value.is_string()) {
    throw SchemaError(ctx, "expected a formula string");
  }
  try {
    return parse(value.get<std::string>());
  } catch (const Error& e) {
    throw FormulaSyntaxError(ctx, e.what());
  }
}

RuleId parse_rule(const json& value, const std::string& ctx) {
  if (!value.is_string()) throw SchemaError(ctx, "expected a rule name");
  auto rule = rule_from_name(value.get<std::string>());
  if (!rule) {
    throw SchemaError(ctx, "unknown rule '" + value.get<std::string>() + "'");
  }
  return *rule;
}

void check_keys(const json& doc, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw SchemaError(ctx, "unknown field '" + key + "'");
  }
}

json justified_to_json(const Justified& j) {
  json parents = json::array();
  for (const auto& p : j.parents) parents.push_back(p.str());
  return json{{"statement", j.statement.str()},
              {"rule", std::string(rule_short_name(j.rule))},
              {"parents", parents}};
}

Justified justified_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc, {"statement", "rule", "parents"}, ctx);
  std::vector<Formula> parents;
  for (const auto& p : doc.at("parents")) {
    parents.push_back(parse_formula(p, ctx + ".parents"));
  }
  return Justified{parse_formula(doc.at("statement"), ctx + ".statement"),
                   parse_rule(doc.at("rule"), ctx + ".rule"),
                   std::move(parents)};
}

json state_to_json(const ProofState& state) {
  json premises = json::array();
  for (const auto& p : state.problem.premises) premises.push_back(p.str());
  json intermediates = json::array();
  for (const auto& j : state.intermediates) {
    intermediates.push_back(justified_to_json(j));
  }
  return json{{"premises", premises},
              {"intermediates", intermediates},
              {"conclusion", state.problem.conclusion.str()}};
}

ProofState state_from_json(const json& doc, const std::string& ctx,
                           const std::string& problem_id) {
  check_keys(doc, {"premises", "intermediates", "conclusion"}, ctx);
  std::vector<Formula> premises;
  for (const auto& p : doc.at("premises")) {
    premises.push_back(parse_formula(p, ctx + ".premises"));
  }
  std::vector<Justified> intermediates;
  int i = 0;
  for (const auto& j : doc.at("intermediates")) {
    intermediates.push_back(justified_from_json(
        j, ctx + ".intermediates[" + std::to_string(i++) + "]"));
  }
  Problem problem{problem_id, 0, std::move(premises),
                  parse_formula(doc.at("conclusion"), ctx + ".conclusion")};
  return ProofState{std::move(problem), std::move(intermediates)};
}

json diagnosis_to_json(const Diagnosis& d) {
  json out{{"label", std::string(to_string(d.label))},
           {"reason", std::string(to_string(d.reason))},
           {"d_before", nullptr},
           {"d_after", nullptr}};
  if (d.d_before) out["d_before"] = *d.d_before;
  if (d.d_after) out["d_after"] = *d.d_after;
  return out;
}

Diagnosis diagnosis_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc, {"label", "reason", "d_before", "d_after"}, ctx);
  Diagnosis d;
  auto label = label_from_string(doc.at("label").get<std::string>());
  if (!label) throw SchemaError(ctx, "unknown diagnosis label");
  d.label = *label;
  const std::string reason = doc.at("reason").get<std::string>();
  bool found = false;
  for (DiagReason r :
       {DiagReason::DistanceReduced, DiagReason::DistanceUnchanged,
        DiagReason::UnknownParent, DiagReason::Redundant,
        DiagReason::BadJustification, DiagReason::CapLimited}) {
    if (to_string(r) == reason) {
      d.reason = r;
      found = true;
      break;
    }
  }
  if (!found) throw SchemaError(ctx, "unknown diagnosis reason");
  if (doc.contains("d_before") && !doc.at("d_before").is_null()) {
    d.d_before = doc.at("d_before").get<int>();
  }
  if (doc.contains("d_after") && !doc.at("d_after").is_null()) {
    d.d_after = doc.at("d_after").get<int>();
  }
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Problems, states, claims

Problem load_problem(const std::string& path) {
  json doc = load_json_file(path);
  check_keys(doc, {"id", "level", "premises", "conclusion"}, path);
  Problem p;
  p.id = doc.at("id").get<std::string>();
  p.level = doc.value("level", 0);
  if (doc.contains("level") && (p.level < 1 || p.level > 7)) {
    throw SchemaError(path, "level must be 1-7");
  }
  for (const auto& prem : doc.at("premises")) {
    p.premises.push_back(parse_formula(prem, path + ".premises"));
  }
  p.conclusion = parse_formula(doc.at("conclusion"), path + ".conclusion");
  validate_problem(p);
  return p;
}

void write_problem(const std::string& path, const Problem& problem) {
  json premises = json::array();
  for (const auto& p : problem.premises) premises.push_back(p.str());
  json doc{{"id", problem.id},
           {"level", problem.level},
           {"premises", premises},
           {"conclusion", problem.conclusion.str()}};
  std::ofstream out(path);
  if (!out) throw SchemaError(path, "cannot open for writing");
  out << doc.dump(2) << "\n";
}

std::vector<Problem> load_problems_dir(const std::string& dir,
                                       std::vector<std::string>* warnings) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) throw SchemaError(dir, "not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Problem> out;
  for (const auto& f : files) {
    Problem p = load_problem(f);
    if (warnings != nullptr && (p.level == 1 || p.level == 7)) {
      warnings->push_back("problem '" + p.id + "': level " +
                          std::to_string(p.level) +
                          " is flagged (no hints at this level)");
    }
    out.push_back(std::move(p));
  }
  return out;
}

json claim_to_json(const StepClaim& claim) {
  json parents = json::array();
  for (const auto& p : claim.parents) parents.push_back(p.str());
  json out{{"statement", claim.statement.str()},
           {"rule", std::string(rule_short_name(claim.rule))},
           {"parents", parents}};
  if (claim.candidates_text) out["candidates_text"] = *claim.candidates_text;
  if (claim.reasoning_text) out["reasoning_text"] = *claim.reasoning_text;
  return out;
}

StepClaim claim_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc,
             {"statement", "rule", "parents", "candidates_text",
              "reasoning_text", "reasoning"},
             ctx);
  std::vector<Formula> parents;
  for (const auto& p : doc.at("parents")) {
    parents.push_back(parse_formula(p, ctx + ".parents"));
  }
  StepClaim claim{parse_formula(doc.at("statement"), ctx + ".statement"),
                  parse_rule(doc.at("rule"), ctx + ".rule"),
                  std::move(parents), std::nullopt, std::nullopt};
  if (doc.contains("candidates_text")) {
    claim.candidates_text = doc.at("candidates_text").get<std::string>();
  }
  if (doc.contains("reasoning_text")) {
    claim.reasoning_text = doc.at("reasoning_text").get<std::string>();
  } else if (doc.contains("reasoning")) {
    claim.reasoning_text = doc.at("reasoning").get<std::string>();
  }
  return claim;
}

StepClaim load_claim(const std::string& path) {
  return claim_from_json(load_json_file(path), path);
}

std::vector<StateRecord> load_states(
    const std::string& path, const std::map<std::string, Problem>& problems,
    const SaturationConfig& cfg) {
  json doc = load_json_file(path);
  if (!doc.is_array()) throw SchemaError(path, "expected an array of states");
  std::vector<StateRecord> out;
  int i = 0;
  for (const auto& entry : doc) {
    const std::string ctx = path + "[" + std::to_string(i++) + "]";
    check_keys(entry,
               {"id", "problem_id", "intermediates", "solution_context"}, ctx);
    StateRecord record;
    record.id = entry.at("id").get<std::string>();
    const std::string problem_id = entry.at("problem_id").get<std::string>();
    auto pit = problems.find(problem_id);
    if (pit == problems.end()) {
      throw SchemaError(ctx, "unknown problem_id '" + problem_id + "'");
    }
    record.state.problem = pit->second;
    int j = 0;
    for (const auto& inter : entry.at("intermediates")) {
      record.state.intermediates.push_back(justified_from_json(
          inter, ctx + ".intermediates[" + std::to_string(j++) + "]"));
    }
    try {
      validate_state(record.state, cfg);
    } catch (const Error& e) {
      throw JustificationError(ctx, e.what());
    }
    if (entry.contains("solution_context")) {
      record.solution_context =
          claim_from_json(entry.at("solution_context"), ctx + ".solution_context");
    }
    out.push_back(std::move(record));
  }
  return out;
}

void write_states(const std::string& path,
                  const std::vector<StateRecord>& records) {
  json doc = json::array();
  for (const auto& r : records) {
    json intermediates = json::array();
    for (const auto& j : r.state.intermediates) {
      intermediates.push_back(justified_to_json(j));
    }
    json entry{{"id", r.id},
               {"problem_id", r.state.problem.id},
               {"intermediates", intermediates}};
    if (r.solution_context) {
      entry["solution_context"] = claim_to_json(*r.solution_context);
    }
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw SchemaError(path, "cannot open for writing");
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Solution spaces

json config_to_json(const SaturationConfig& cfg) {
  json rules = json::array();
  for (RuleId r : cfg.enabled_rules) {
    rules.push_back(std::string(rule_short_name(r)));
  }
  auto weights_array = [](const std::array<int, 5>& arr) {
    return json{{"not", arr[0]},
                {"and", arr[1]},
                {"or", arr[2]},
                {"implies", arr[3]},
                {"iff", arr[4]}};
  };
  return json{
      {"max_statements", cfg.max_statements},
      {"max_complexity", cfg.max_complexity},
      {"max_depth", cfg.max_depth},
      {"rules", rules},
      {"relevant_closure_negation", cfg.relevant_closure_negation},
      {"rule_options",
       json{{"com_assoc_on_and", cfg.rule_options.com_assoc_on_and},
            {"distribute_dual", cfg.rule_options.distribute_dual},
            {"allow_self_conjunction",
             cfg.rule_options.allow_self_conjunction}}},
      {"weights", json{{"base", weights_array(cfg.weights.base)},
                       {"nest", weights_array(cfg.weights.nest)},
                       {"paren_unit", cfg.weights.paren_unit}}},
  };
}

SaturationConfig config_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc,
             {"max_statements", "max_complexity", "max_depth", "rules",
              "relevant_closure_negation", "rule_options", "weights"},
             ctx);
  SaturationConfig cfg;
  cfg.max_statements = doc.value("max_statements", cfg.max_statements);
  cfg.max_complexity = doc.value("max_complexity", cfg.max_complexity);
  cfg.max_depth = doc.value("max_depth", cfg.max_depth);
  if (doc.contains("rules")) {
    cfg.enabled_rules.clear();
    for (const auto& r : doc.at("rules")) {
      cfg.enabled_rules.insert(parse_rule(r, ctx + ".rules"));
    }
  }
  cfg.relevant_closure_negation =
      doc.value("relevant_closure_negation", cfg.relevant_closure_negation);
  if (doc.contains("rule_options")) {
    const json& ro = doc.at("rule_options");
    check_keys(ro,
               {"com_assoc_on_and", "distribute_dual", "allow_self_conjunction"},
               ctx + ".rule_options");
    cfg.rule_options.com_assoc_on_and =
        ro.value("com_assoc_on_and", cfg.rule_options.com_assoc_on_and);
    cfg.rule_options.distribute_dual =
        ro.value("distribute_dual", cfg.rule_options.distribute_dual);
    cfg.rule_options.allow_self_conjunction = ro.value(
        "allow_self_conjunction", cfg.rule_options.allow_self_conjunction);
  }
  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    check_keys(w, {"base", "nest", "paren_unit"}, ctx + ".weights");
    auto read_array = [&](const json& obj, std::array<int, 5>& arr) {
      arr[0] = obj.value("not", arr[0]);
      arr[1] = obj.value("and", arr[1]);
      arr[2] = obj.value("or", arr[2]);
      arr[3] = obj.value("implies", arr[3]);
      arr[4] = obj.value("iff", arr[4]);
    };
    if (w.contains("base")) read_array(w.at("base"), cfg.weights.base);
    if (w.contains("nest")) read_array(w.at("nest"), cfg.weights.nest);
    cfg.weights.paren_unit = w.value("paren_unit", cfg.weights.paren_unit);
    try {
      validate_weights(cfg.weights);
    } catch (const Error& e) {
      throw SchemaError(ctx + ".weights", e.what());
    }
  }
  return cfg;
}

void save_space(const std::string& path, const SolutionSpace& space) {
  json statements = json::array();
  for (const auto& s : space.statements) statements.push_back(s.str());
  json derivations = json::array();
  for (const auto& e : space.derivations) {
    derivations.push_back(json{{"rule", std::string(rule_short_name(e.rule))},
                               {"parents", e.parents},
                               {"result", e.result}});
  }
  json premises = json::array();
  for (const auto& p : space.problem.premises) premises.push_back(p.str());
  json doc{
      {"problem", json{{"id", space.problem.id},
                       {"level", space.problem.level},
                       {"premises", premises},
                       {"conclusion", space.problem.conclusion.str()}}},
      {"config", config_to_json(space.config)},
      {"statements", statements},
      {"derivations", derivations},
      {"saturation_complete", space.saturation_complete},
  };
  doc["config_hash"] = fnv1a64_hex(doc.at("config").dump());
  std::ofstream out(path);
  if (!out) throw SchemaError(path, "cannot open for writing");
  out << doc.dump() << "\n";
}

SolutionSpace load_space(const std::string& path) {
  json doc = load_json_file(path);
  check_keys(doc,
             {"problem", "config", "statements", "derivations",
              "saturation_complete", "config_hash"},
             path);
  SolutionSpace space;
  const json& prob = doc.at("problem");
  check_keys(prob, {"id", "level", "premises", "conclusion"},
             path + ".problem");
  space.problem.id = prob.at("id").get<std::string>();
  space.problem.level = prob.value("level", 0);
  for (const auto& p : prob.at("premises")) {
    space.problem.premises.push_back(parse_formula(p, path + ".premises"));
  }
  space.problem.conclusion =
      parse_formula(prob.at("conclusion"), path + ".conclusion");
  space.config = config_from_json(doc.at("config"), path + ".config");
  for (const auto& s : doc.at("statements")) {
    space.statements.push_back(parse_formula(s, path + ".statements"));
  }
  space.saturation_complete = doc.at("saturation_complete").get<bool>();
  space.relevant = relevant_set(space.problem, space.config);

  const int n = static_cast<int>(space.statements.size());
  int i = 0;
  for (const auto& e : doc.at("derivations")) {
    const std::string ctx = path + ".derivations[" + std::to_string(i++) + "]";
    check_keys(e, {"rule", "parents", "result"}, ctx);
    SolutionSpace::Hyperedge edge;
    edge.rule = parse_rule(e.at("rule"), ctx);
    edge.result = e.at("result").get<int>();
    for (const auto& p : e.at("parents")) edge.parents.push_back(p.get<int>());
    if (edge.result < 0 || edge.result >= n) {
      throw SchemaError(ctx, "result index out of range");
    }
    std::vector<Formula> parents;
    for (int p : edge.parents) {
      if (p < 0 || p >= n) throw SchemaError(ctx, "parent index out of range");
      parents.push_back(space.statements[p]);
    }
    auto check =
        check_justification(edge.rule, parents, space.statements[edge.result],
                            space.relevant, space.config.rule_options);
    if (!check.valid) {
      throw JustificationError(ctx, "hyperedge fails justification");
    }
    space.derivations.push_back(std::move(edge));
  }
  space.finalize();
  return space;
}

// ---------------------------------------------------------------------------
// JSONL corpora

namespace {

json agent_label_to_json(const AgentLabel& label) {
  return json{{"raw", label.raw},
              {"mapped", label.mapped ? std::string(to_string(*label.mapped))
                                      : std::string("ParseFailure")}};
}

AgentLabel agent_label_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc, {"raw", "mapped"}, ctx);
  AgentLabel out;
  out.raw = doc.at("raw").get<std::string>();
  const std::string mapped = doc.at("mapped").get<std::string>();
  if (mapped != "ParseFailure") {
    out.mapped = label_from_string(mapped);
    if (!out.mapped) throw SchemaError(ctx, "unknown mapped label");
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

json claim_record_to_json(const ClaimRecord& record) {
  json out{
      {"instance_id", record.instance_id},
      {"problem_id", record.problem_id},
      {"model_name", record.model_name},
      {"state", state_to_json(record.state)},
      {"solution_context", record.solution_context
                               ? claim_to_json(*record.solution_context)
                               : json(nullptr)},
      {"claim", record.claim ? claim_to_json(*record.claim) : json(nullptr)},
      {"raw", record.raw_fields},
      {"truth",
       record.truth ? diagnosis_to_json(*record.truth) : json(nullptr)},
      {"attempts_used", record.attempts_used},
      {"flagged", record.flagged},
      {"config_hash", record.config_hash},
  };
  return out;
}

ClaimRecord claim_record_from_json(const json& doc, const std::string& ctx) {
  check_keys(doc,
             {"instance_id", "problem_id", "model_name", "state",
              "solution_context", "claim", "raw", "truth", "attempts_used",
              "flagged", "config_hash"},
             ctx);
  ClaimRecord out;
  out.instance_id = doc.at("instance_id").get<std::string>();
  out.problem_id = doc.at("problem_id").get<std::string>();
  out.model_name = doc.at("model_name").get<std::string>();
  out.state = state_from_json(doc.at("state"), ctx + ".state", out.problem_id);
  if (!doc.at("solution_context").is_null()) {
    out.solution_context =
        claim_from_json(doc.at("solution_context"), ctx + ".solution_context");
  }
  if (!doc.at("claim").is_null()) {
    out.claim = claim_from_json(doc.at("claim"), ctx + ".claim");
  }
  if (doc.contains("raw")) {
    for (const auto& [k, v] : doc.at("raw").items()) {
      out.raw_fields[k] = v.get<std::string>();
    }
  }
  if (!doc.at("truth").is_null()) {
    out.truth = diagnosis_from_json(doc.at("truth"), ctx + ".truth");
  }
  out.attempts_used = doc.at("attempts_used").get<int>();
  out.flagged = doc.at("flagged").get<bool>();
  out.config_hash = doc.value("config_hash", "");
  return out;
}

std::vector<ClaimRecord> read_claims(const std::string& path) {
  std::vector<ClaimRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(i + 1);
    try {
      out.push_back(claim_record_from_json(json::parse(lines[i]), ctx));
    } catch (const json::exception& e) {
      throw SchemaError(ctx, std::string("invalid JSON: ") + e.what());
    }
  }
  return out;
}

void append_claim(std::ostream& out, const ClaimRecord& record) {
  out << claim_record_to_json(record).dump() << "\n";
  out.flush();
}

json pair_to_json(const PairRecord& record) {
  json out{
      {"instance_id", record.instance_id},
      {"problem_id", record.problem_id},
      {"model_name", record.model_name},
      {"condition", record.condition},
      {"state", state_to_json(record.state)},
      {"solution_context", record.solution_context
                               ? claim_to_json(*record.solution_context)
                               : json(nullptr)},
      {"claim", claim_to_json(record.claim)},
      {"truth", diagnosis_to_json(record.truth)},
      {"agent_label", agent_label_to_json(record.agent_label)},
      {"feedback_text", record.feedback_text},
      {"attempts_used", record.attempts_used},
      {"flagged", record.flagged},
      {"config_hash", record.config_hash},
  };
  out["claim"]["raw"] = record.claim_raw;
  if (record.extra.is_object()) {
    for (const auto& [k, v] : record.extra.items()) {
      if (!out.contains(k)) out[k] = v;
    }
  }
  return out;
}

PairRecord pair_from_json(const json& doc, const std::string& ctx,
                          bool strict) {
  static const std::initializer_list<const char*> known = {
      "instance_id", "problem_id",  "model_name",    "condition",
      "state",       "solution_context", "claim",    "truth",
      "agent_label", "feedback_text",    "attempts_used", "flagged",
      "config_hash"};
  PairRecord out;
  if (strict) {
    check_keys(doc, known, ctx);
  } else {
    out.extra = json::object();
    for (const auto& [k, v] : doc.items()) {
      bool is_known = false;
      for (const char* a : known) {
        if (k == a) {
          is_known = true;
          break;
        }
      }
      if (!is_known) out.extra[k] = v;
    }
  }
  out.instance_id = doc.at("instance_id").get<std::string>();
  out.problem_id = doc.at("problem_id").get<std::string>();
  out.model_name = doc.at("model_name").get<std::string>();
  out.condition = doc.at("condition").get<std::string>();
  if (!condition_from_string(out.condition)) {
    throw SchemaError(ctx, "unknown condition '" + out.condition + "'");
  }
  out.state = state_from_json(doc.at("state"), ctx + ".state", out.problem_id);
  if (!doc.at("solution_context").is_null()) {
    out.solution_context =
        claim_from_json(doc.at("solution_context"), ctx + ".solution_context");
  }
  json claim_doc = doc.at("claim");
  if (claim_doc.contains("raw")) {
    for (const auto& [k, v] : claim_doc.at("raw").items()) {
      out.claim_raw[k] = v.get<std::string>();
    }
    claim_doc.erase("raw");
  }
  out.claim = claim_from_json(claim_doc, ctx + ".claim");
  out.truth = diagnosis_from_json(doc.at("truth"), ctx + ".truth");
  out.agent_label =
      agent_label_from_json(doc.at("agent_label"), ctx + ".agent_label");
  out.feedback_text = doc.at("feedback_text").get<std::string>();
  out.attempts_used = doc.at("attempts_used").get<int>();
  out.flagged = doc.at("flagged").get<bool>();
  out.config_hash = doc.value("config_hash", "");
  return out;
}

std::vector<PairRecord> read_pairs(const std::string& path,
                                   bool repair_partial_tail, bool strict) {
  auto lines = read_lines(path);
  std::vector<PairRecord> out;
  std::set<std::string> keys;
  bool truncated = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(i + 1);
    json doc;
    try {
      doc = json::parse(lines[i]);
    } catch (const json::exception& e) {
      if (repair_partial_tail && i + 1 == lines.size()) {
        truncated = true;
        lines.pop_back();
        break;
      }
      throw SchemaError(ctx, std::string("invalid JSON: ") + e.what());
    }
    PairRecord record = pair_from_json(doc, ctx, strict);
    const std::string key =
        record.instance_id + "\x1f" + record.model_name + "\x1f" +
        record.condition;
    if (!keys.insert(key).second) {
      throw SchemaError(ctx, "duplicate (instance, model, condition) key");
    }
    out.push_back(std::move(record));
  }
  if (truncated) {
    std::ofstream rewrite(path, std::ios::trunc);
    for (const auto& line : lines) rewrite << line << "\n";
  }
  return out;
}

void append_pair(std::ostream& out, const PairRecord& record) {
  out << pair_to_json(record).dump() << "\n";
  out.flush();
}

// ---------------------------------------------------------------------------
// Rubric import

std::vector<RubricRecord> import_rubric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path, "empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : s) {
      if (c == ',') {
        fields.push_back(current);
        current.clear();
      } else if (c != '\r') {
        current.push_back(c);
      }
    }
    fields.push_back(current);
    return fields;
  };
  const std::vector<std::string> header = split(line);
  const std::vector<std::string> expected = {
      "pair_id",   "rater_id", "correctness",
      "error_identification", "revealing", "actionability"};
  if (header != expected) {
    throw SchemaError(path + ":1", "unexpected rubric header");
  }
  std::vector<RubricRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto fields = split(line);
    if (fields.size() != expected.size()) {
      throw SchemaError(ctx, "wrong number of columns");
    }
    RubricRecord r;
    r.pair_id = fields[0];
    r.rater_id = fields[1];
    int* slots[4] = {&r.correctness, &r.error_identification, &r.revealing,
                     &r.actionability};
    for (int i = 0; i < 4; ++i) {
      try {
        *slots[i] = std::stoi(fields[2 + i]);
      } catch (const std::exception&) {
        throw SchemaError(ctx, "score is not an integer");
      }
      if (*slots[i] < 1 || *slots[i] > 3) {
        throw SchemaError(ctx, "scores use the 3-point scale 1-3");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

RunConfig load_run_config(const std::string& path) {
  json doc = load_json_file(path);
  check_keys(doc, {"endpoints", "saturation", "tiers"}, path);
  RunConfig cfg;
  if (!doc.contains("endpoints") || !doc.at("endpoints").is_array() ||
      doc.at("endpoints").empty()) {
    throw SchemaError(path, "endpoints array required");
  }
  std::set<std::string> names;
  for (const auto& e : doc.at("endpoints")) {
    check_keys(e,
               {"name", "base_url", "model", "api_key_env", "temperature",
                "max_attempts", "request_timeout_s", "max_in_flight"},
               path + ".endpoints");
    ModelEndpoint ep;
    ep.name = e.at("name").get<std::string>();
    ep.base_url = e.at("base_url").get<std::string>();
    ep.model = e.value("model", "");
    ep.api_key_env = e.value("api_key_env", "");
    ep.temperature = e.value("temperature", 0.0);
    ep.max_attempts = e.value("max_attempts", 3);
    ep.request_timeout_s = e.value("request_timeout_s", 60.0);
    ep.max_in_flight = e.value("max_in_flight", 1);
    if (!names.insert(ep.name).second) {
      throw SchemaError(path, "duplicate endpoint name '" + ep.name + "'");
    }
    cfg.endpoints.push_back(std::move(ep));
  }
  if (doc.contains("saturation")) {
    cfg.saturation = config_from_json(doc.at("saturation"), path + ".saturation");
  }
  if (doc.contains("tiers")) {
    const json& t = doc.at("tiers");
    check_keys(t,
               {"complexity_low_max", "complexity_medium_max",
                "distance_near_max", "distance_mid_max"},
               path + ".tiers");
    cfg.tiers.complexity_low_max =
        t.value("complexity_low_max", cfg.tiers.complexity_low_max);
    cfg.tiers.complexity_medium_max =
        t.value("complexity_medium_max", cfg.tiers.complexity_medium_max);
    cfg.tiers.distance_near_max =
        t.value("distance_near_max", cfg.tiers.distance_near_max);
    cfg.tiers.distance_mid_max =
        t.value("distance_mid_max", cfg.tiers.distance_mid_max);
  }
  cfg.config_hash = fnv1a64_hex(doc.dump());
  return cfg;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

Report build_report(const std::vector<PairRecord>& records,
                    const TierSpec& tiers, const ComplexityWeights& weights) {
  const std::vector<std::string> conditions = {"peer", "teacher", "judge"};

  std::map<std::string, std::map<std::string, Confusion3>> by_model_condition;
  std::map<std::string, Confusion3> pooled_by_model;
  std::map<std::pair<std::string, std::string>, Confusion3> by_complexity_tier;
  std::map<std::pair<std::string, std::string>, Confusion3> by_distance_tier;
  std::vector<double> outcome;
  std::vector<std::string> group_model;
  std::vector<std::string> group_condition;
  // per truth class: complexity of correctly vs incorrectly diagnosed rows
  std::array<std::vector<double>, 3> cx_correct;
  std::array<std::vector<double>, 3> cx_incorrect;

  for (const auto& r : records) {
    auto& cell = by_model_condition[r.model_name][r.condition];
    auto& pooled = pooled_by_model[r.model_name];
    if (r.truth.label == DiagLabel::Indeterminate) {
      ++cell.indeterminate_count;
      ++pooled.indeterminate_count;
      continue;
    }
    if (r.flagged || !r.agent_label.mapped) {
      ++cell.parse_failure_count;
      ++pooled.parse_failure_count;
      continue;
    }
    const DiagLabel truth = r.truth.label;
    const DiagLabel predicted = *r.agent_label.mapped;
    cell.add(truth, predicted);
    pooled.add(truth, predicted);

    const int cx = complexity(r.claim.statement, weights);
    by_complexity_tier[{r.model_name,
                        std::string(tier_of(cx, TierKind::Complexity, tiers))}]
        .add(truth, predicted);
    if (r.truth.d_before) {
      by_distance_tier[{r.model_name,
                        std::string(tier_of(*r.truth.d_before,
                                            TierKind::Distance, tiers))}]
          .add(truth, predicted);
    }

    const bool correct = truth == predicted;
    outcome.push_back(correct ? 1.0 : 0.0);
    group_model.push_back(r.model_name);
    group_condition.push_back(r.condition);
    const int k = Confusion3::class_index(truth);
    (correct ? cx_correct[k] : cx_incorrect[k]).push_back(cx);
  }

  Report report;
  report.main_rows = json::array();
  std::string csv =
      "model,opt_f1_avg,va_f1_peer,va_f1_teacher,va_f1_judge,"
      "inc_f1_peer,inc_f1_teacher,inc_f1_judge,over_rejection,"
      "over_validation,n,excluded\n";

  for (const auto& [model, cells] : by_model_condition) {
    json row{{"model", model}};
    double opt_sum = 0.0;
    int opt_n = 0;
    json per_condition = json::object();
    for (const auto& cond : conditions) {
      auto it = cells.find(cond);
      if (it == cells.end() || it->second.total() == 0) {
        per_condition[cond] = nullptr;
        continue;
      }
      const auto scores = f1_per_class(it->second);
      per_condition[cond] = json{{"optimal_f1", scores[0].f1},
                                 {"valid_alternative_f1", scores[1].f1},
                                 {"incorrect_f1", scores[2].f1},
                                 {"n", it->second.total()}};
      opt_sum += scores[0].f1;
      ++opt_n;
    }
    const auto& pooled = pooled_by_model.at(model);
    const auto or_rate = over_rejection(pooled);
    const auto ov_rate = over_validation(pooled);
    row["by_condition"] = per_condition;
    row["optimal_f1_avg"] = opt_n > 0 ? json(opt_sum / opt_n) : json(nullptr);
    row["over_rejection"] = opt_json(or_rate);
    row["over_validation"] = opt_json(ov_rate);
    row["n"] = pooled.total();
    row["excluded"] = json{{"indeterminate", pooled.indeterminate_count},
                           {"parse_failure", pooled.parse_failure_count}};
    report.main_rows.push_back(row);

    auto f1_of = [&](const std::string& cond, int cls) -> std::string {
      auto it = cells.find(cond);
      if (it == cells.end() || it->second.total() == 0) return "";
      return fmt(f1_per_class(it->second)[cls].f1);
    };
    csv += model + "," + (opt_n > 0 ? fmt(opt_sum / opt_n) : "") + "," +
           f1_of("peer", 1) + "," + f1_of("teacher", 1) + "," +
           f1_of("judge", 1) + "," + f1_of("peer", 2) + "," +
           f1_of("teacher", 2) + "," + f1_of("judge", 2) + "," +
           fmt_opt(or_rate) + "," + fmt_opt(ov_rate) + "," +
           std::to_string(pooled.total()) + "," +
           std::to_string(pooled.indeterminate_count +
                          pooled.parse_failure_count) +
           "\n";
  }
  report.main_csv = std::move(csv);

  auto tier_table = [](const std::map<std::pair<std::string, std::string>,
                                      Confusion3>& cells) {
    json rows = json::array();
    for (const auto& [key, confusion] : cells) {
      rows.push_back(
          json{{"model", key.first},
               {"tier", key.second},
               {"over_rejection", opt_json(over_rejection(confusion))},
               {"over_validation", opt_json(over_validation(confusion))},
               {"n_valid_alternative",
                confusion.truth_total(DiagLabel::ValidAlternative)},
               {"n_incorrect", confusion.truth_total(DiagLabel::Incorrect)}});
    }
    return rows;
  };
  report.tier_complexity = tier_table(by_complexity_tier);
  report.tier_distance = tier_table(by_distance_tier);

  std::string tiers_csv =
      "kind,model,tier,over_rejection,over_validation,n_valid_alternative,"
      "n_incorrect\n";
  auto tier_csv_rows = [&](const char* kind, const json& rows) {
    for (const auto& row : rows) {
      tiers_csv += std::string(kind) + "," +
                   row.at("model").get<std::string>() + "," +
                   row.at("tier").get<std::string>() + "," +
                   (row.at("over_rejection").is_null()
                        ? ""
                        : fmt(row.at("over_rejection").get<double>())) +
                   "," +
                   (row.at("over_validation").is_null()
                        ? ""
                        : fmt(row.at("over_validation").get<double>())) +
                   "," +
                   std::to_string(
                       row.at("n_valid_alternative").get<long>()) +
                   "," + std::to_string(row.at("n_incorrect").get<long>()) +
                   "\n";
    }
  };
  tier_csv_rows("complexity", report.tier_complexity);
  tier_csv_rows("distance", report.tier_distance);
  report.tiers_csv = std::move(tiers_csv);

  report.factors = json::object();
  auto eta_of = [&](const std::vector<std::string>& groups) -> json {
    std::set<std::string> distinct(groups.begin(), groups.end());
    if (outcome.empty() || distinct.size() < 2) return nullptr;
    return eta_squared(outcome, groups);
  };
  report.factors["eta_squared_model"] = eta_of(group_model);
  report.factors["eta_squared_condition"] = eta_of(group_condition);
  report.factors["n"] = outcome.size();

  report.complexity_by_truth = json::array();
  const char* class_names[3] = {"Optimal", "ValidAlternative", "Incorrect"};
  for (int k = 0; k < 3; ++k) {
    const auto& good = cx_correct[k];
    const auto& bad = cx_incorrect[k];
    auto mean = [](const std::vector<double>& v) -> json {
      if (v.empty()) return nullptr;
      double sum = 0.0;
      for (double x : v) sum += x;
      return sum / static_cast<double>(v.size());
    };
    json row{{"truth", class_names[k]},
             {"mean_complexity_correct", mean(good)},
             {"mean_complexity_incorrect", mean(bad)},
             {"n", good.size() + bad.size()},
             {"p_mann_whitney", nullptr}};
    if (!good.empty() && !bad.empty()) {
      row["p_mann_whitney"] = mann_whitney_u(good, bad).p;
    }
    report.complexity_by_truth.push_back(std::move(row));
  }
  return report;
}

nlohmann::json rubric_agreement(const std::vector<RubricRecord>& records) {
  std::set<std::string> raters;
  for (const auto& r : records) raters.insert(r.rater_id);
  if (raters.size() != 2) {
    throw SchemaError("rubric", "agreement needs exactly two raters");
  }
  const std::string rater1 = *raters.begin();
  const std::string rater2 = *std::next(raters.begin());

  std::map<std::string, const RubricRecord*> first;
  std::map<std::string, const RubricRecord*> second;
  for (const auto& r : records) {
    (r.rater_id == rater1 ? first : second)[r.pair_id] = &r;
  }
  std::array<std::vector<std::string>, 4> s1;
  std::array<std::vector<std::string>, 4> s2;
  std::vector<std::string> all1;
  std::vector<std::string> all2;
  long paired = 0;
  for (const auto& [pair_id, a] : first) {
    auto it = second.find(pair_id);
    if (it == second.end()) continue;
    const RubricRecord* b = it->second;
    const int va[4] = {a->correctness, a->error_identification, a->revealing,
                       a->actionability};
    const int vb[4] = {b->correctness, b->error_identification, b->revealing,
                       b->actionability};
    for (int d = 0; d < 4; ++d) {
      s1[d].push_back(std::to_string(va[d]));
      s2[d].push_back(std::to_string(vb[d]));
      all1.push_back(std::to_string(va[d]));
      all2.push_back(std::to_string(vb[d]));
    }
    ++paired;
  }
  if (paired == 0) throw SchemaError("rubric", "no pairs rated by both raters");
  const char* dims[4] = {"correctness", "error_identification", "revealing",
                         "actionability"};
  json kappa = json::object();
  for (int d = 0; d < 4; ++d) kappa[dims[d]] = cohens_kappa(s1[d], s2[d]);
  kappa["overall"] = cohens_kappa(all1, all2);
  return json{{"raters", json::array({rater1, rater2})},
              {"n_pairs", paired},
              {"kappa", kappa}};
}

}  // namespace prooflab
