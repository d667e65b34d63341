#include "prooflab/agents.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "prooflab/hash.hpp"

namespace prooflab {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Student:
      return "student";
    case Role::Peer:
      return "peer";
    case Role::Teacher:
      return "teacher";
    case Role::Judge:
      return "judge";
  }
  return "?";
}

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::Peer:
      return "peer";
    case Condition::Teacher:
      return "teacher";
    case Condition::Judge:
      return "judge";
  }
  return "?";
}

std::optional<Condition> condition_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "peer") return Condition::Peer;
  if (lower == "teacher") return Condition::Teacher;
  if (lower == "judge") return Condition::Judge;
  return std::nullopt;
}

Role role_of(Condition condition) {
  switch (condition) {
    case Condition::Peer:
      return Role::Peer;
    case Condition::Teacher:
      return Role::Teacher;
    case Condition::Judge:
      return Role::Judge;
  }
  return Role::Peer;
}

// ---------------------------------------------------------------------------
// Prompt templates

namespace {

const std::string kStudentSystem = R"(Role: You are a Student in an undergraduate Discrete Structures course solving a propositional logic proof. Your task is to produce the single most optimal next step that advances the proof toward the conclusion.

Task:
1. Review the givens and intermediate steps.
2. Propose 2-3 candidate next steps.
3. Select the candidate that most directly advances toward the conclusion.
4. Justify your choice and output the selected next step.

Constraints:
- Output exactly one next step in symbolic notation only.
- Use only predefined inference rules (e.g., MP, MT, Conj, DS).
- Parent statements must be actual expressions, not line numbers.

Response Format:
- CANDIDATES: 2-3 candidate steps with brief justification
- REASONING: Why the selected step is optimal
- NEXT_STEP: Symbolic expression
- RULE: Inference rule (short name)
- PARENT_STATEMENTS: Supporting expressions)";

const std::string kPeerSystem = R"(Role: You are a Peer evaluating a student's proposed next step in a propositional logic proof, with access to the KG-derived optimal step.

Task:
1. Analyze how the optimal step is derived (rule and parent statements).
2. Evaluate the student's candidates, reasoning, and chosen next step.
3. Classify the student's step as Correct, Valid Alternative, or Incorrect.
4. Provide brief, scaffolded feedback guiding the student toward the optimal step.

Constraints:
- Do not reveal the optimal step, its rule, or parent statements.
- Acknowledge what the student did correctly before addressing errors.
- Use Socratic questions to guide reasoning; keep feedback concise (2-3 sentences).
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- PEER_FEEDBACK: Scaffolded guidance without answer revelation)";

const std::string kTeacherSystem = R"(Role: You are a Teacher evaluating a student's proposed next step in a propositional logic proof, with access to the complete solution (KNOWLEDGE_BASE_STEPS).

Task:
1. Compare the student's response against the knowledge-base solution.
2. Identify errors in the student's logic, rule usage, or reasoning.
3. Classify the student's next step as Correct, Valid Alternative, or Incorrect.
4. Provide brief, scaffolded feedback guiding the student toward the correct solution.

Constraints:
- Do not reveal the exact next step, rule, or parent statements from the solution.
- Acknowledge correct aspects of the student's attempt before addressing errors.
- Use Socratic questions to guide reasoning; keep feedback concise (2-3 sentences).
- Refer to the student's candidates when relevant.
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- TEACHER_FEEDBACK: Scaffolded guidance without answer revelation)";

const std::string kJudgeSystem = R"(Role: You are an expert pedagogical AI Judge for propositional logic proof problems, with access to the complete solution (KNOWLEDGE_BASE_STEPS). You evaluate both the student's proposed next step and the Teacher's feedback.

Task:
1. Compare the student's response against the knowledge-base solution.
2. Identify errors in the student's reasoning, if any.
3. Classify the student's next step as Correct, Valid Alternative, or Incorrect.
4. Evaluate whether the Teacher's feedback correctly guides the student.
5. Either enhance the Teacher's feedback or override it with corrected guidance.

Constraints:
- Do not reveal the exact next step, rule, or parent statements from the solution.
- Acknowledge correct aspects of the student's attempt before addressing errors.
- Use Socratic questions to guide reasoning; scaffold rather than instruct.
- Override Teacher feedback if it is incorrect, misleading, or reveals the solution.
- Keep final feedback concise (2-3 sentences) and encouraging.
- Use predefined inference rule short names only.

Response Format:
- STUDENT_ERRORS: Brief explanation or Correct
- NEXT_STEP_CORRECTNESS: Correct / Suboptimal / Incorrect
- TEACHER_FEEDBACK_CORRECTNESS: Assessment of Teacher feedback
- JUDGE_ACTION: Enhanced or Overridden
- FINAL_FEEDBACK: Judge-approved scaffolded guidance)";

std::string join_formulas(const std::vector<Formula>& fs,
                          const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i > 0) out += sep;
    out += fs[i].str();
  }
  return out;
}

}  // namespace

const std::string& system_template(Role role) {
  switch (role) {
    case Role::Student:
      return kStudentSystem;
    case Role::Peer:
      return kPeerSystem;
    case Role::Teacher:
      return kTeacherSystem;
    case Role::Judge:
      return kJudgeSystem;
  }
  return kStudentSystem;
}

std::string solution_context_sentence(const StepClaim& context) {
  std::string parents;
  for (std::size_t i = 0; i < context.parents.size(); ++i) {
    if (i > 0) parents += (i + 1 == context.parents.size()) ? " and " : ", ";
    parents += context.parents[i].str();
  }
  std::string rule_phrase;
  if (context.rule == RuleId::DeM) {
    rule_phrase = "De Morgan's Law";
  } else {
    rule_phrase = "the " + std::string(rule_long_name(context.rule)) + " rule";
  }
  std::string out = "Derive " + context.statement.str();
  if (!parents.empty()) out += " from " + parents;
  out += " using " + rule_phrase + ".";
  return out;
}

RenderedPrompt render_prompt(Role role, const ProofState& state,
                             const StepClaim* claim,
                             const StepClaim* solution_context,
                             const std::string* peer_feedback) {
  if (role != Role::Student) {
    if (claim == nullptr) {
      throw MissingArgumentError("feedback roles need the student claim");
    }
    if (solution_context == nullptr) {
      throw MissingArgumentError("feedback roles need the solution context");
    }
  }
  if (role == Role::Judge && peer_feedback == nullptr) {
    throw MissingArgumentError("judge needs the peer feedback");
  }

  // Statement line numbers: premises first, then intermediates.
  std::map<std::string, int> line_of;
  int line = 0;
  std::string user = "Givens:\n";
  for (const auto& p : state.problem.premises) {
    line_of[p.str()] = ++line;
    user += "(" + std::to_string(line) + ") " + p.str() + "\n";
  }
  if (!state.intermediates.empty()) {
    user += "Intermediate Steps:\n";
    for (const auto& j : state.intermediates) {
      line_of[j.statement.str()] = ++line;
      user += "(" + std::to_string(line) + ") " + j.statement.str() + " [" +
              std::string(rule_short_name(j.rule)) + ":";
      for (std::size_t i = 0; i < j.parents.size(); ++i) {
        user += (i > 0) ? ", " : " ";
        auto it = line_of.find(j.parents[i].str());
        user += (it != line_of.end()) ? "(" + std::to_string(it->second) + ")"
                                      : j.parents[i].str();
      }
      user += "]\n";
    }
  }
  user += "Conclusion: " + state.problem.conclusion.str() + "\n";

  if (role != Role::Student) {
    user += "\nStudent Response:\n";
    user += "CANDIDATES: " + claim->candidates_text.value_or("") + "\n";
    user += "REASONING: " + claim->reasoning_text.value_or("") + "\n";
    user += "NEXT_STEP: " + claim->statement.str() + "\n";
    user += "RULE: " + std::string(rule_short_name(claim->rule)) + "\n";
    user += "PARENT_STATEMENTS: " + join_formulas(claim->parents, "; ") + "\n";
  }

  RenderedPrompt out;
  out.system_text = system_template(role);
  switch (role) {
    case Role::Student:
      break;
    case Role::Peer:
      out.context_slice = solution_context->statement.str();
      user += "\nPeer Solution Context:\n" + out.context_slice + "\n";
      break;
    case Role::Teacher:
    case Role::Judge:
      out.context_slice = solution_context_sentence(*solution_context);
      user += "\nKnowledge Base Steps:\n" + out.context_slice + "\n";
      if (role == Role::Judge) {
        user += "\nPeer Feedback:\n" + *peer_feedback + "\n";
      }
      break;
  }
  out.user_text = std::move(user);
  return out;
}

std::string request_key(const std::string& system_text,
                        const std::string& user_text) {
  return fnv1a64_hex(system_text + "\x1e" + user_text);
}

// ---------------------------------------------------------------------------
// HTTP client

std::string HttpChatClient::complete(const ModelEndpoint& endpoint,
                                     const std::string& system_text,
                                     const std::string& user_text) {
  std::string scheme_host = endpoint.base_url;
  std::string path = "/";
  const auto scheme_end = scheme_host.find("://");
  if (scheme_end != std::string::npos) {
    const auto path_start = scheme_host.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
      path = scheme_host.substr(path_start);
      scheme_host = scheme_host.substr(0, path_start);
    }
  }

  httplib::Client client(scheme_host);
  client.set_connection_timeout(
      std::chrono::milliseconds(static_cast<int>(endpoint.request_timeout_s * 1000)));
  client.set_read_timeout(
      std::chrono::milliseconds(static_cast<int>(endpoint.request_timeout_s * 1000)));

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError("environment variable " + endpoint.api_key_env +
                      " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json body{
      {"model", endpoint.model.empty() ? endpoint.name : endpoint.model},
      {"messages",
       json::array({json{{"role", "system"}, {"content", system_text}},
                    json{{"role", "user"}, {"content", user_text}}})},
      {"temperature", endpoint.temperature},
  };

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        err == httplib::Error::Read || err == httplib::Error::Write) {
      throw TimeoutError("request to " + endpoint.base_url + " timed out");
    }
    throw TransportError("request to " + endpoint.base_url + " failed: " +
                         httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw AuthError("authentication rejected by " + endpoint.base_url);
  }
  if (res->status != 200) {
    throw TransportError("http " + std::to_string(res->status) + " from " +
                         endpoint.base_url);
  }

  std::string content;
  try {
    json parsed = json::parse(res->body);
    content = parsed.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion payload: ") +
                         e.what());
  }
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw EmptyResponseError();
  }
  return content;
}

// ---------------------------------------------------------------------------
// Mock client

MockChatClient::MockChatClient(std::vector<MockRule> rules,
                               std::optional<std::string> default_response,
                               bool strict, int delay_ms)
    : rules_(std::move(rules)),
      cursors_(rules_.size(), 0),
      default_response_(std::move(default_response)),
      strict_(strict),
      delay_ms_(delay_ms) {}

std::unique_ptr<MockChatClient> MockChatClient::from_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mock script " + path);
  json doc = json::parse(in);
  std::vector<MockRule> rules;
  for (const auto& r : doc.value("rules", json::array())) {
    MockRule rule;
    rule.key = r.value("key", "");
    rule.system_contains = r.value("system_contains", "");
    rule.user_contains = r.value("user_contains", "");
    if (r.contains("responses")) {
      for (const auto& resp : r.at("responses")) {
        rule.responses.push_back(resp.get<std::string>());
      }
    } else if (r.contains("response")) {
      rule.responses.push_back(r.at("response").get<std::string>());
    }
    rules.push_back(std::move(rule));
  }
  std::optional<std::string> fallback;
  if (doc.contains("default") && !doc.at("default").is_null()) {
    fallback = doc.at("default").get<std::string>();
  }
  return std::make_unique<MockChatClient>(std::move(rules), std::move(fallback),
                                          doc.value("strict", false),
                                          doc.value("delay_ms", 0));
}

std::string MockChatClient::complete(const ModelEndpoint&,
                                     const std::string& system_text,
                                     const std::string& user_text) {
  if (delay_ms_ > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
  }
  const std::string key = request_key(system_text, user_text);
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const MockRule& rule = rules_[i];
    if (!rule.key.empty() && rule.key != key) continue;
    if (!rule.system_contains.empty() &&
        system_text.find(rule.system_contains) == std::string::npos) {
      continue;
    }
    if (!rule.user_contains.empty() &&
        user_text.find(rule.user_contains) == std::string::npos) {
      continue;
    }
    if (rule.responses.empty()) continue;
    const std::size_t pick = std::min(cursors_[i], rule.responses.size() - 1);
    ++cursors_[i];
    return rule.responses[pick];
  }
  if (default_response_ && !strict_) return *default_response_;
  throw UnscriptedRequestError("no scripted response for request " + key);
}

std::unique_ptr<ChatClient> make_client(const ModelEndpoint& endpoint) {
  if (endpoint.base_url.rfind("mock://", 0) == 0) {
    return MockChatClient::from_file(endpoint.base_url.substr(7));
  }
  return std::make_unique<HttpChatClient>();
}

// ---------------------------------------------------------------------------
// Response parsing and validation

std::vector<std::string> required_fields(Role role) {
  switch (role) {
    case Role::Student:
      return {"CANDIDATES", "REASONING", "NEXT_STEP", "RULE",
              "PARENT_STATEMENTS"};
    case Role::Peer:
      return {"STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS", "PEER_FEEDBACK"};
    case Role::Teacher:
      return {"STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS", "TEACHER_FEEDBACK"};
    case Role::Judge:
      return {"STUDENT_ERRORS", "NEXT_STEP_CORRECTNESS",
              "TEACHER_FEEDBACK_CORRECTNESS", "JUDGE_ACTION", "FINAL_FEEDBACK"};
  }
  return {};
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string normalize_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      out.push_back(
          static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    } else if (c == ' ' && !out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string json_value_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += "; ";
      out += item.is_string() ? item.get<std::string>() : item.dump();
    }
    return out;
  }
  return v.dump();
}

bool looks_like_line_reference(const std::string& token) {
  std::string t = trim(token);
  if (t.empty()) return false;
  // strip one level of wrapping
  if ((t.front() == '(' && t.back() == ')') ||
      (t.front() == '[' && t.back() == ']')) {
    t = trim(t.substr(1, t.size() - 2));
  }
  std::string lower;
  for (char c : t) {
    lower.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (const char* prefix : {"line ", "step ", "statement ", "premise "}) {
    if (lower.rfind(prefix, 0) == 0) {
      t = trim(t.substr(std::string(prefix).size()));
      break;
    }
  }
  if (t.empty()) return false;
  return std::all_of(t.begin(), t.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::vector<std::string> split_parent_tokens(const std::string& value) {
  std::string v = trim(value);
  // JSON-style array spelled inline
  if (!v.empty() && v.front() == '[' && v.back() == ']') {
    try {
      json arr = json::parse(v);
      if (arr.is_array()) {
        std::vector<std::string> out;
        for (const auto& item : arr) out.push_back(json_value_to_string(item));
        return out;
      }
    } catch (const json::exception&) {
      // fall through to delimiter split
    }
  }
  const char delim = v.find(';') != std::string::npos ? ';' : ',';
  std::vector<std::string> out;
  std::string current;
  for (char c : v) {
    if (c == delim) {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(current);
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_agent_fields(const std::string& raw) {
  std::map<std::string, std::string> fields;

  // JSON object, possibly wrapped in prose or a code fence.
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open != std::string::npos && close != std::string::npos &&
      close > open) {
    try {
      json doc = json::parse(raw.substr(open, close - open + 1));
      if (doc.is_object()) {
        for (const auto& [k, v] : doc.items()) {
          fields[normalize_key(k)] = trim(json_value_to_string(v));
        }
        if (!fields.empty()) return fields;
      }
    } catch (const json::exception&) {
      // fall through to the labeled-text parser
    }
  }

  // Labeled plain text: "FIELD: value", values may span following lines.
  std::string current_key;
  std::string current_value;
  auto flush = [&] {
    if (!current_key.empty()) fields[current_key] = trim(current_value);
    current_key.clear();
    current_value.clear();
  };
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto nl = raw.find('\n', start);
    std::string line = raw.substr(
        start, nl == std::string::npos ? std::string::npos : nl - start);
    std::string stripped = trim(line);
    while (!stripped.empty() &&
           (stripped.front() == '-' || stripped.front() == '*' ||
            stripped.front() == '#' || stripped.front() == '`')) {
      stripped.erase(stripped.begin());
    }
    const auto colon = stripped.find(':');
    bool is_label = false;
    if (colon != std::string::npos && colon > 0) {
      const std::string head = stripped.substr(0, colon);
      is_label = !head.empty() &&
                 std::all_of(head.begin(), head.end(), [](unsigned char c) {
                   return std::isupper(c) || c == '_' || c == ' ';
                 }) &&
                 std::any_of(head.begin(), head.end(), [](unsigned char c) {
                   return std::isupper(c);
                 });
      if (is_label) {
        flush();
        current_key = normalize_key(head);
        current_value = stripped.substr(colon + 1);
      }
    }
    if (!is_label && !current_key.empty()) {
      current_value += "\n" + line;
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  flush();
  return fields;
}

ClaimParse claim_from_fields(const std::map<std::string, std::string>& fields) {
  auto get = [&](const char* key) -> const std::string* {
    auto it = fields.find(key);
    return it == fields.end() ? nullptr : &it->second;
  };
  const std::string* next_step = get("NEXT_STEP");
  const std::string* rule_text = get("RULE");
  const std::string* parents_text = get("PARENT_STATEMENTS");
  if (next_step == nullptr || rule_text == nullptr || parents_text == nullptr) {
    return {std::nullopt, "missing NEXT_STEP, RULE or PARENT_STATEMENTS"};
  }

  auto rule = rule_from_name(trim(*rule_text));
  if (!rule) return {std::nullopt, "unknown rule '" + *rule_text + "'"};

  std::optional<Formula> statement;
  try {
    statement = parse(trim(*next_step));
  } catch (const Error& e) {
    return {std::nullopt, std::string("NEXT_STEP does not parse: ") + e.what()};
  }

  std::vector<Formula> parents;
  for (const auto& token : split_parent_tokens(*parents_text)) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    if (looks_like_line_reference(t)) {
      return {std::nullopt,
              "parent '" + t + "' is a line number, not an expression"};
    }
    try {
      parents.push_back(parse(t));
    } catch (const Error& e) {
      return {std::nullopt,
              "parent '" + t + "' does not parse: " + e.what()};
    }
  }
  if (parents.empty()) {
    return {std::nullopt, "no parent statements given"};
  }

  StepClaim claim{*statement, *rule, std::move(parents), std::nullopt,
                  std::nullopt};
  if (const std::string* c = get("CANDIDATES")) claim.candidates_text = *c;
  if (const std::string* r = get("REASONING")) claim.reasoning_text = *r;
  return {std::move(claim), ""};
}

AgentResponse validated_exchange(ChatClient& client,
                                 const ModelEndpoint& endpoint, Role role,
                                 const RenderedPrompt& prompt) {
  const std::vector<std::string> needed = required_fields(role);
  AgentResponse last;
  last.role = role;

  const int attempts = std::max(1, endpoint.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last.attempts_used = attempt;
    std::string raw;
    try {
      raw = client.complete(endpoint, prompt.system_text, prompt.user_text);
    } catch (const EmptyResponseError&) {
      last.raw_text.clear();
      last.fields.clear();
      continue;  // zero-token outputs retry automatically
    }
    last.raw_text = raw;
    last.fields = parse_agent_fields(raw);

    bool ok = true;
    for (const auto& key : needed) {
      if (last.fields.find(key) == last.fields.end()) {
        ok = false;
        break;
      }
    }
    if (ok && role == Role::Student) {
      ok = claim_from_fields(last.fields).claim.has_value();
    }
    if (ok && role != Role::Student) {
      ok = map_agent_label(last.fields.at("NEXT_STEP_CORRECTNESS")).has_value();
    }
    if (ok) {
      last.flagged = false;
      return last;
    }
  }
  last.flagged = true;  // persistent failures surface for manual review
  return last;
}

}  // namespace prooflab
