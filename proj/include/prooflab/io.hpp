#ifndef PROOFLAB_IO_HPP
#define PROOFLAB_IO_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prooflab/agents.hpp"
#include "prooflab/diagnosis.hpp"
#include "prooflab/metrics.hpp"
#include "prooflab/solution_space.hpp"

namespace prooflab {

class SchemaError : public Error {
 public:
  SchemaError(std::string context, std::string message)
      : Error(context + ": " + message) {}
};

class FormulaSyntaxError : public Error {
 public:
  FormulaSyntaxError(std::string context, std::string message)
      : Error(context + ": " + message) {}
};

class JustificationError : public Error {
 public:
  JustificationError(std::string context, std::string message)
      : Error(context + ": " + message) {}
};

struct AgentLabel {
  std::string raw;
  std::optional<DiagLabel> mapped;  // nullopt records a parse failure
};

/// One simulated student solution with its oracle truth; the unit the
/// feedback stage consumes.
struct ClaimRecord {
  std::string instance_id;
  std::string problem_id;
  std::string model_name;
  ProofState state;
  std::optional<StepClaim> solution_context;
  std::optional<StepClaim> claim;  // absent when the exchange was flagged
  std::map<std::string, std::string> raw_fields;
  std::optional<Diagnosis> truth;
  int attempts_used = 0;
  bool flagged = false;
  std::string config_hash;
};

/// One solution-feedback instance. truth always comes from the diagnosis
/// oracle; (instance_id, model_name, condition) is unique within a run.
struct PairRecord {
  std::string instance_id;
  std::string problem_id;
  std::string model_name;
  std::string condition;  // peer / teacher / judge
  ProofState state;
  std::optional<StepClaim> solution_context;
  StepClaim claim;
  std::map<std::string, std::string> claim_raw;
  Diagnosis truth;
  AgentLabel agent_label;
  std::string feedback_text;
  int attempts_used = 0;  // feedback exchange
  bool flagged = false;
  std::string config_hash;
  nlohmann::json extra;  // unknown fields, preserved in lenient mode
};

struct RubricRecord {
  std::string pair_id;
  std::string rater_id;
  int correctness = 0;
  int error_identification = 0;
  int revealing = 0;
  int actionability = 0;
};

struct StateRecord {
  std::string id;
  ProofState state;
  std::optional<StepClaim> solution_context;
};

struct RunConfig {
  std::vector<ModelEndpoint> endpoints;
  SaturationConfig saturation;
  TierSpec tiers;
  std::string config_hash;
};

// -- Problems and states -----------------------------------------------------

Problem load_problem(const std::string& path);
void write_problem(const std::string& path, const Problem& problem);
/// All *.json files in the directory, in filename order. Levels 1 and 7 are
/// accepted but reported through `warnings`.
std::vector<Problem> load_problems_dir(const std::string& dir,
                                       std::vector<std::string>* warnings);

std::vector<StateRecord> load_states(
    const std::string& path, const std::map<std::string, Problem>& problems,
    const SaturationConfig& cfg);
void write_states(const std::string& path,
                  const std::vector<StateRecord>& records);

StepClaim load_claim(const std::string& path);
StepClaim claim_from_json(const nlohmann::json& doc, const std::string& ctx);
nlohmann::json claim_to_json(const StepClaim& claim);

// -- Solution spaces ----------------------------------------------------------

void save_space(const std::string& path, const SolutionSpace& space);
SolutionSpace load_space(const std::string& path);

nlohmann::json config_to_json(const SaturationConfig& cfg);
SaturationConfig config_from_json(const nlohmann::json& doc,
                                  const std::string& ctx);

// -- JSONL corpora -------------------------------------------------------------

nlohmann::json claim_record_to_json(const ClaimRecord& record);
ClaimRecord claim_record_from_json(const nlohmann::json& doc,
                                   const std::string& ctx);
std::vector<ClaimRecord> read_claims(const std::string& path);
void append_claim(std::ostream& out, const ClaimRecord& record);

nlohmann::json pair_to_json(const PairRecord& record);
PairRecord pair_from_json(const nlohmann::json& doc, const std::string& ctx,
                          bool strict);
/// repair_partial_tail tolerates (and removes) a final line cut short by an
/// interrupted writer; any other malformed line is an error.
std::vector<PairRecord> read_pairs(const std::string& path,
                                   bool repair_partial_tail = false,
                                   bool strict = true);
void append_pair(std::ostream& out, const PairRecord& record);

// -- Rubric import --------------------------------------------------------------

std::vector<RubricRecord> import_rubric(const std::string& path);

// -- Run configuration ------------------------------------------------------------

RunConfig load_run_config(const std::string& path);

// -- Reports ------------------------------------------------------------------------

struct Report {
  nlohmann::json main_rows;
  nlohmann::json tier_complexity;
  nlohmann::json tier_distance;
  nlohmann::json factors;
  nlohmann::json complexity_by_truth;
  std::string main_csv;
  std::string tiers_csv;
};

/// The paper-shaped tables: per-model F1 by condition plus pooled OR/OV,
/// tier breakdowns, eta-squared factor summary, and the mean-complexity
/// comparison of correctly vs incorrectly diagnosed steps.
Report build_report(const std::vector<PairRecord>& records,
                    const TierSpec& tiers, const ComplexityWeights& weights);

/// Per-dimension Cohen's kappa between the two raters in the rubric file.
nlohmann::json rubric_agreement(const std::vector<RubricRecord>& records);

}  // namespace prooflab

#endif  // PROOFLAB_IO_HPP
