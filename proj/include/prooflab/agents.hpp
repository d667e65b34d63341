#ifndef PROOFLAB_AGENTS_HPP
#define PROOFLAB_AGENTS_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prooflab/diagnosis.hpp"

namespace prooflab {

enum class Role { Student, Peer, Teacher, Judge };

/// Feedback conditions; each differs only in the solution context handed to
/// the agent. Peer sees the next-step statement alone, Teacher the statement
/// plus rule and parents, Judge the Teacher context plus the Peer's feedback.
enum class Condition { Peer, Teacher, Judge };

std::string_view to_string(Role role);
std::string_view to_string(Condition condition);
std::optional<Condition> condition_from_string(std::string_view name);
Role role_of(Condition condition);

class MissingArgumentError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

class EmptyResponseError : public Error {
 public:
  EmptyResponseError() : Error("model returned zero tokens") {}
};

class UnscriptedRequestError : public Error {
 public:
  using Error::Error;
};

struct ModelEndpoint {
  std::string name;
  std::string base_url;
  std::string model;        // payload model id; defaults to name when empty
  std::string api_key_env;  // credentials live in the environment only
  double temperature = 0.0;
  int max_attempts = 3;
  double request_timeout_s = 60.0;
  int max_in_flight = 1;
};

struct AgentResponse {
  Role role = Role::Student;
  std::string raw_text;
  std::map<std::string, std::string> fields;
  int attempts_used = 0;
  bool flagged = false;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
  std::string context_slice;  // the solution-context portion, for audits
};

const std::string& system_template(Role role);

/// Deterministic prompt assembly. Feedback roles require the student claim
/// and the solution context; Judge additionally requires the Peer feedback.
/// Throws MissingArgumentError otherwise.
RenderedPrompt render_prompt(Role role, const ProofState& state,
                             const StepClaim* claim,
                             const StepClaim* solution_context,
                             const std::string* peer_feedback);

/// The Teacher/Judge solution-context sentence, e.g.
/// "Derive ¬(¬S ∨ Y) from ¬(S → Y) using the Implication rule."
std::string solution_context_sentence(const StepClaim& context);

std::string request_key(const std::string& system_text,
                        const std::string& user_text);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ModelEndpoint& endpoint,
                               const std::string& system_text,
                               const std::string& user_text) = 0;
};

/// One chat-completions-style POST per call. Throws TransportError /
/// TimeoutError / AuthError; an empty completion throws EmptyResponseError.
class HttpChatClient : public ChatClient {
 public:
  std::string complete(const ModelEndpoint& endpoint,
                       const std::string& system_text,
                       const std::string& user_text) override;
};

/// One entry of a mock script: the first rule whose key and substring
/// filters all match serves the request.
struct MockRule {
  std::string key;              // exact request key, or empty
  std::string system_contains;  // substring filters, empty = any
  std::string user_contains;
  std::vector<std::string> responses;  // consumed in order, last repeats
};

class MockChatClient : public ChatClient {
 public:
  MockChatClient(std::vector<MockRule> rules,
                 std::optional<std::string> default_response, bool strict,
                 int delay_ms = 0);

  static std::unique_ptr<MockChatClient> from_file(const std::string& path);

  std::string complete(const ModelEndpoint& endpoint,
                       const std::string& system_text,
                       const std::string& user_text) override;

 private:
  std::vector<MockRule> rules_;
  std::vector<std::size_t> cursors_;
  std::optional<std::string> default_response_;
  bool strict_;
  int delay_ms_;
  std::mutex mu_;
};

/// Builds a client for the endpoint: mock:// URLs load a script file,
/// anything else goes over HTTP.
std::unique_ptr<ChatClient> make_client(const ModelEndpoint& endpoint);

std::vector<std::string> required_fields(Role role);

/// Parses a JSON-object response, falling back to labeled "FIELD: value"
/// lines. Keys are uppercased with spaces collapsed to underscores.
std::map<std::string, std::string> parse_agent_fields(const std::string& raw);

struct ClaimParse {
  std::optional<StepClaim> claim;
  std::string error;
};

/// Builds a StepClaim from Student response fields. Parent statements must
/// be actual expressions; line-number references are rejected.
ClaimParse claim_from_fields(const std::map<std::string, std::string>& fields);

/// Up to max_attempts calls; responses missing required fields, failing
/// role-specific validation, or empty trigger a retry. After exhaustion the
/// response is flagged with the last raw text preserved. Transport-level
/// errors propagate.
AgentResponse validated_exchange(ChatClient& client,
                                 const ModelEndpoint& endpoint, Role role,
                                 const RenderedPrompt& prompt);

}  // namespace prooflab

#endif  // PROOFLAB_AGENTS_HPP
