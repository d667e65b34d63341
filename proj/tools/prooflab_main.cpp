// prooflab: build solution spaces, diagnose steps, run the simulation and
// feedback pipeline, and emit report tables.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "prooflab/agents.hpp"
#include "prooflab/diagnosis.hpp"
#include "prooflab/io.hpp"
#include "prooflab/metrics.hpp"
#include "prooflab/solution_space.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prooflab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitFlagged = 2;

// ---------------------------------------------------------------------------
// build-space

int run_build_space(const std::string& problems_dir, const std::string& out_dir,
                    SaturationConfig cfg) {
  std::vector<std::string> warnings;
  std::vector<Problem> problems = load_problems_dir(problems_dir, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (problems.empty()) {
    std::cerr << "no problems found in " << problems_dir << "\n";
    return kExitInputError;
  }
  fs::create_directories(out_dir);

  std::vector<std::future<SolutionSpace>> futures;
  futures.reserve(problems.size());
  for (const auto& p : problems) {
    futures.push_back(std::async(std::launch::async,
                                 [&cfg, p] { return saturate(p, cfg); }));
  }
  for (std::size_t i = 0; i < problems.size(); ++i) {
    SolutionSpace space = futures[i].get();
    const std::string path =
        (fs::path(out_dir) / (space.problem.id + ".json")).string();
    save_space(path, space);
    std::cout << space.problem.id << ": statements=" << space.statements.size()
              << " edges=" << space.derivations.size()
              << " complete=" << (space.saturation_complete ? "true" : "false")
              << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

StateRecord load_single_state(const std::string& path,
                              const Problem& problem,
                              const SaturationConfig& cfg) {
  // Accept either a single state object or a one-element array.
  json doc;
  {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, "cannot open file");
    doc = json::parse(in);
  }
  if (doc.is_object()) doc = json::array({doc});
  const std::string tmp = path + ".normalized";
  {
    std::ofstream out(tmp);
    out << doc.dump() << "\n";
  }
  std::map<std::string, Problem> problems{{problem.id, problem}};
  auto records = load_states(tmp, problems, cfg);
  fs::remove(tmp);
  if (records.size() != 1) {
    throw SchemaError(path, "expected exactly one state");
  }
  return records.front();
}

int run_diagnose(const std::string& space_path, const std::string& state_path,
                 const std::string& claim_path) {
  SolutionSpace space = load_space(space_path);
  StateRecord record = load_single_state(state_path, space.problem,
                                         space.config);
  StepClaim claim = load_claim(claim_path);
  Diagnosis diag = classify(space, record.state, claim);
  json out{{"label", std::string(to_string(diag.label))},
           {"reason", std::string(to_string(diag.reason))},
           {"d_before", diag.d_before ? json(*diag.d_before) : json(nullptr)},
           {"d_after", diag.d_after ? json(*diag.d_after) : json(nullptr)}};
  std::cout << out.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// shared pipeline plumbing

std::map<std::string, SolutionSpace> load_spaces_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw SchemaError(dir, "not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, SolutionSpace> out;
  for (const auto& f : files) {
    SolutionSpace space = load_space(f);
    const std::string id = space.problem.id;
    out.emplace(id, std::move(space));
  }
  return out;
}

void require_api_keys(const std::vector<ModelEndpoint>& endpoints) {
  for (const auto& ep : endpoints) {
    if (ep.base_url.rfind("mock://", 0) == 0 || ep.api_key_env.empty()) {
      continue;
    }
    const char* key = std::getenv(ep.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error("endpoint '" + ep.name + "' needs the environment variable " +
                  ep.api_key_env + " to be set");
    }
  }
}

/// First derivation in space order that is a valid distance-reducing step
/// from the state; the expert next step when the states file carries none.
std::optional<StepClaim> derive_optimal_context(const SolutionSpace& space,
                                                const ProofState& state) {
  const Distance before = distance(space, state);
  if (!before.finite() || before.steps == 0) return std::nullopt;
  std::set<std::string> known;
  for (const auto& f : state.known()) known.insert(f.str());
  for (const auto& edge : space.derivations) {
    const Formula& result = space.statements[edge.result];
    if (known.count(result.str()) > 0) continue;
    bool applicable = true;
    for (int p : edge.parents) {
      if (known.count(space.statements[p].str()) == 0) {
        applicable = false;
        break;
      }
    }
    if (!applicable) continue;
    ProofState after = state;
    std::vector<Formula> parents;
    for (int p : edge.parents) parents.push_back(space.statements[p]);
    after.intermediates.push_back({result, edge.rule, parents});
    const Distance post = distance(space, after);
    if (post.finite() && post.steps == before.steps - 1) {
      return StepClaim{result, edge.rule, parents, std::nullopt, std::nullopt};
    }
  }
  return std::nullopt;
}

/// Runs tasks with at most `width` workers, committing results in input
/// order. The run function may throw; the first exception aborts the batch.
template <typename Task, typename Run, typename Commit>
void ordered_parallel_run(const std::vector<Task>& tasks, int width, Run run,
                          Commit commit) {
  if (tasks.empty()) return;
  width = std::max(1, std::min<int>(width, static_cast<int>(tasks.size())));
  if (width == 1) {
    for (const auto& task : tasks) commit(run(task));
    return;
  }
  using Result = decltype(run(tasks.front()));
  std::mutex mu;
  std::map<std::size_t, Result> done;
  std::size_t next_commit = 0;
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        Result r = run(tasks[i]);
        std::lock_guard<std::mutex> lock(mu);
        done.emplace(i, std::move(r));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  for (auto& [i, r] : done) {
    (void)i;
    commit(std::move(r));
  }
  (void)next_commit;
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const std::string& spaces_dir, const std::string& states_path,
                 const std::string& endpoints_path, const std::string& roles,
                 const std::string& out_path, long limit) {
  if (roles != "student") {
    throw Error("only --roles student is supported");
  }
  RunConfig run_cfg = load_run_config(endpoints_path);
  require_api_keys(run_cfg.endpoints);

  auto spaces = load_spaces_dir(spaces_dir);
  std::map<std::string, Problem> problems;
  for (const auto& [id, space] : spaces) problems.emplace(id, space.problem);
  auto states = load_states(states_path, problems, run_cfg.saturation);

  std::set<std::string> existing;
  if (fs::exists(out_path)) {
    for (const auto& r : read_claims(out_path)) {
      existing.insert(r.instance_id + "\x1f" + r.model_name);
    }
  }
  std::ofstream out(out_path, std::ios::app);
  if (!out) throw SchemaError(out_path, "cannot open for writing");

  bool any_flagged = false;
  long written = 0;
  for (const auto& endpoint : run_cfg.endpoints) {
    auto client = make_client(endpoint);

    struct Task {
      const StateRecord* record;
      const SolutionSpace* space;
    };
    std::vector<Task> tasks;
    for (const auto& record : states) {
      if (existing.count(record.id + "\x1f" + endpoint.name) > 0) {
        std::cerr << "skip existing " << record.id << " x " << endpoint.name
                  << "\n";
        continue;
      }
      if (limit >= 0 && written + static_cast<long>(tasks.size()) >= limit) {
        break;
      }
      tasks.push_back({&record, &spaces.at(record.state.problem.id)});
    }

    auto run_one = [&](const Task& task) {
      const StateRecord& record = *task.record;
      const SolutionSpace& space = *task.space;
      RenderedPrompt prompt =
          render_prompt(Role::Student, record.state, nullptr, nullptr, nullptr);
      AgentResponse response =
          validated_exchange(*client, endpoint, Role::Student, prompt);

      ClaimRecord claim_record;
      claim_record.instance_id = record.id;
      claim_record.problem_id = record.state.problem.id;
      claim_record.model_name = endpoint.name;
      claim_record.state = record.state;
      claim_record.raw_fields = response.fields;
      claim_record.attempts_used = response.attempts_used;
      claim_record.flagged = response.flagged;
      claim_record.config_hash = run_cfg.config_hash;
      claim_record.solution_context =
          record.solution_context ? record.solution_context
                                  : derive_optimal_context(space, record.state);
      if (!response.flagged) {
        auto parsed = claim_from_fields(response.fields);
        claim_record.claim = parsed.claim;
        if (parsed.claim) {
          // Oracle truth, fixed before any feedback agent runs.
          claim_record.truth = classify(space, record.state, *parsed.claim);
        }
      }
      return claim_record;
    };
    auto commit = [&](ClaimRecord record) {
      any_flagged = any_flagged || record.flagged;
      append_claim(out, record);
      ++written;
    };
    ordered_parallel_run(tasks, endpoint.max_in_flight, run_one, commit);
  }
  std::cerr << "simulate: wrote " << written << " claim records\n";
  return any_flagged ? kExitFlagged : kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

int run_evaluate(const std::string& claims_path,
                 const std::string& endpoints_path,
                 const std::string& conditions_csv,
                 const std::string& out_path, long limit) {
  RunConfig run_cfg = load_run_config(endpoints_path);

  std::vector<Condition> conditions;
  {
    std::string token;
    std::stringstream ss(conditions_csv);
    std::set<Condition> seen;
    while (std::getline(ss, token, ',')) {
      auto c = condition_from_string(token);
      if (!c) throw Error("unknown condition '" + token + "'");
      seen.insert(*c);
    }
    // canonical order: peer before teacher before judge
    for (Condition c : {Condition::Peer, Condition::Teacher, Condition::Judge}) {
      if (seen.count(c) > 0) conditions.push_back(c);
    }
  }
  if (conditions.empty()) throw Error("no conditions requested");

  auto claims = read_claims(claims_path);
  std::map<std::string, const ModelEndpoint*> endpoints;
  for (const auto& ep : run_cfg.endpoints) endpoints[ep.name] = &ep;
  std::vector<ModelEndpoint> used;
  for (const auto& c : claims) {
    auto it = endpoints.find(c.model_name);
    if (it == endpoints.end()) {
      throw Error("claims reference endpoint '" + c.model_name +
                  "' missing from " + endpoints_path);
    }
  }
  for (const auto& ep : run_cfg.endpoints) used.push_back(ep);
  require_api_keys(used);

  std::set<std::string> existing_keys;
  std::map<std::string, std::string> peer_feedback;  // instance\x1fmodel -> text
  bool any_flagged = false;
  if (fs::exists(out_path)) {
    for (const auto& r : read_pairs(out_path, /*repair_partial_tail=*/true)) {
      if (!r.config_hash.empty() && r.config_hash != run_cfg.config_hash) {
        throw Error(out_path + " was produced with a different config");
      }
      existing_keys.insert(r.instance_id + "\x1f" + r.model_name + "\x1f" +
                           r.condition);
      if (r.condition == "peer") {
        peer_feedback[r.instance_id + "\x1f" + r.model_name] = r.feedback_text;
      }
      any_flagged = any_flagged || r.flagged;
    }
  }
  std::ofstream out(out_path, std::ios::app);
  if (!out) throw SchemaError(out_path, "cannot open for writing");

  std::map<std::string, std::unique_ptr<ChatClient>> clients;
  for (const auto& ep : run_cfg.endpoints) {
    clients.emplace(ep.name, make_client(ep));
  }

  struct Task {
    const ClaimRecord* claim;
  };
  std::vector<Task> tasks;
  long planned = 0;
  for (const auto& record : claims) {
    if (record.flagged || !record.claim || !record.truth) {
      std::cerr << "skip " << record.instance_id << " x " << record.model_name
                << ": no usable claim (flagged or unparsed)\n";
      continue;
    }
    if (!record.solution_context) {
      std::cerr << "skip " << record.instance_id << " x " << record.model_name
                << ": no solution context\n";
      continue;
    }
    bool all_done = true;
    for (Condition c : conditions) {
      if (existing_keys.count(record.instance_id + "\x1f" +
                              record.model_name + "\x1f" +
                              std::string(to_string(c))) == 0) {
        all_done = false;
      }
    }
    if (all_done) {
      std::cerr << "skip existing " << record.instance_id << " x "
                << record.model_name << "\n";
      continue;
    }
    if (limit >= 0 && planned >= limit) break;
    tasks.push_back({&record});
    ++planned;
  }

  long written = 0;
  auto run_one = [&](const Task& task) {
    const ClaimRecord& record = *task.claim;
    const ModelEndpoint& endpoint = *endpoints.at(record.model_name);
    ChatClient& client = *clients.at(record.model_name);
    const std::string instance_key =
        record.instance_id + "\x1f" + record.model_name;

    std::vector<PairRecord> produced;
    std::string local_peer_feedback;
    {
      auto it = peer_feedback.find(instance_key);
      if (it != peer_feedback.end()) local_peer_feedback = it->second;
    }
    for (Condition condition : conditions) {
      const std::string cond_name(to_string(condition));
      if (existing_keys.count(instance_key + "\x1f" + cond_name) > 0) continue;

      const Role role = role_of(condition);
      const std::string* pf = nullptr;
      if (condition == Condition::Judge) pf = &local_peer_feedback;
      RenderedPrompt prompt = render_prompt(
          role, record.state, &record.claim.value(),
          &record.solution_context.value(), pf);
      AgentResponse response =
          validated_exchange(client, endpoint, role, prompt);

      PairRecord pair;
      pair.instance_id = record.instance_id;
      pair.problem_id = record.problem_id;
      pair.model_name = record.model_name;
      pair.condition = cond_name;
      pair.state = record.state;
      pair.solution_context = record.solution_context;
      pair.claim = *record.claim;
      pair.claim_raw = record.raw_fields;
      pair.truth = *record.truth;
      pair.attempts_used = response.attempts_used;
      pair.flagged = response.flagged;
      pair.config_hash = run_cfg.config_hash;

      auto field = [&](const char* key) -> std::string {
        auto it = response.fields.find(key);
        return it == response.fields.end() ? "" : it->second;
      };
      pair.agent_label.raw = field("NEXT_STEP_CORRECTNESS");
      pair.agent_label.mapped =
          response.flagged ? std::nullopt
                           : map_agent_label(pair.agent_label.raw);
      switch (condition) {
        case Condition::Peer:
          pair.feedback_text = field("PEER_FEEDBACK");
          local_peer_feedback = pair.feedback_text;
          break;
        case Condition::Teacher:
          pair.feedback_text = field("TEACHER_FEEDBACK");
          break;
        case Condition::Judge:
          pair.feedback_text = field("FINAL_FEEDBACK");
          break;
      }
      produced.push_back(std::move(pair));
    }
    return produced;
  };
  auto commit = [&](std::vector<PairRecord> produced) {
    for (auto& pair : produced) {
      any_flagged = any_flagged || pair.flagged;
      if (pair.condition == "peer") {
        peer_feedback[pair.instance_id + "\x1f" + pair.model_name] =
            pair.feedback_text;
      }
      append_pair(out, pair);
      ++written;
    }
  };

  // Judges reuse the peer feedback produced in the same task, so group by
  // instance and parallelize across instances only.
  int width = 1;
  for (const auto& ep : run_cfg.endpoints) {
    width = std::max(width, ep.max_in_flight);
  }
  ordered_parallel_run(tasks, width, run_one, commit);

  std::cerr << "evaluate: wrote " << written << " pair records\n";
  return any_flagged ? kExitFlagged : kExitOk;
}

// ---------------------------------------------------------------------------
// report

int run_report(const std::string& pairs_path, const std::string& rubric_path,
               const std::string& out_prefix, const std::string& group_by,
               const std::string& tiers_arg, const std::string& config_path) {
  TierSpec tiers;
  ComplexityWeights weights;
  if (!config_path.empty()) {
    RunConfig run_cfg = load_run_config(config_path);
    tiers = run_cfg.tiers;
    weights = run_cfg.saturation.weights;
  }
  if (tiers_arg != "default" && !tiers_arg.empty()) {
    std::ifstream in(tiers_arg);
    if (!in) throw SchemaError(tiers_arg, "cannot open tiers file");
    json t = json::parse(in);
    tiers.complexity_low_max =
        t.value("complexity_low_max", tiers.complexity_low_max);
    tiers.complexity_medium_max =
        t.value("complexity_medium_max", tiers.complexity_medium_max);
    tiers.distance_near_max =
        t.value("distance_near_max", tiers.distance_near_max);
    tiers.distance_mid_max = t.value("distance_mid_max", tiers.distance_mid_max);
  }

  auto records = read_pairs(pairs_path);
  Report report = build_report(records, tiers, weights);

  json doc{{"main", report.main_rows},
           {"tiers", json{{"complexity", report.tier_complexity},
                          {"distance", report.tier_distance}}},
           {"factors", report.factors},
           {"complexity_by_truth", report.complexity_by_truth}};
  if (!rubric_path.empty()) {
    doc["rubric_agreement"] = rubric_agreement(import_rubric(rubric_path));
  }

  {
    std::ofstream js(out_prefix + ".json");
    js << doc.dump(2) << "\n";
    std::ofstream main_csv(out_prefix + "_main.csv");
    main_csv << report.main_csv;
    std::ofstream tiers_csv(out_prefix + "_tiers.csv");
    tiers_csv << report.tiers_csv;
  }

  std::cout << report.main_csv;
  for (const std::string& factor : {std::string("model"),
                                    std::string("condition")}) {
    if (group_by.find(factor) == std::string::npos) continue;
    const json& value = report.factors.at("eta_squared_" + factor);
    std::cout << "eta_squared " << factor << " = "
              << (value.is_null() ? "n/a" : std::to_string(value.get<double>()))
              << "\n";
  }
  if (doc.contains("rubric_agreement")) {
    std::cout << "rubric kappa overall = "
              << doc["rubric_agreement"]["kappa"]["overall"].get<double>()
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"propositional-logic solution spaces and LLM feedback evaluation"};
  app.require_subcommand(1);

  // build-space
  auto* build = app.add_subcommand("build-space",
                                   "Saturate problems into solution spaces");
  std::string problems_dir;
  std::string build_out;
  SaturationConfig build_cfg;
  std::string rules_csv;
  build->add_option("--problems", problems_dir, "Directory of problem JSON")
      ->required();
  build->add_option("--out", build_out, "Output directory")->required();
  build->add_option("--max-statements", build_cfg.max_statements,
                    "Statement cap");
  build->add_option("--max-complexity", build_cfg.max_complexity,
                    "Complexity cap");
  build->add_option("--max-depth", build_cfg.max_depth, "Depth cap");
  build->add_option("--rules", rules_csv, "Comma-separated rule short names");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Classify one step claim");
  std::string space_path;
  std::string state_path;
  std::string claim_path;
  diagnose->add_option("--space", space_path, "Solution space JSON")
      ->required();
  diagnose->add_option("--state", state_path, "Proof state JSON")->required();
  diagnose->add_option("--claim", claim_path, "Step claim JSON")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate",
                                      "Generate student claims per state");
  std::string sim_spaces;
  std::string sim_states;
  std::string sim_endpoints;
  std::string sim_roles = "student";
  std::string sim_out;
  long sim_limit = -1;
  simulate->add_option("--spaces", sim_spaces, "Directory of space JSON")
      ->required();
  simulate->add_option("--states", sim_states, "States JSON file")->required();
  simulate->add_option("--endpoints", sim_endpoints, "Run config JSON")
      ->required();
  simulate->add_option("--roles", sim_roles, "Roles to simulate (student)");
  simulate->add_option("--out", sim_out, "Claims JSONL output")->required();
  simulate->add_option("--limit", sim_limit, "Stop after N new records");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate",
                                      "Run feedback agents over claims");
  std::string eval_in;
  std::string eval_endpoints;
  std::string eval_conditions = "peer,teacher,judge";
  std::string eval_out;
  long eval_limit = -1;
  evaluate->add_option("--pairs-in", eval_in, "Claims JSONL from simulate")
      ->required();
  evaluate->add_option("--endpoints", eval_endpoints, "Run config JSON")
      ->required();
  evaluate->add_option("--conditions", eval_conditions,
                       "Comma-separated subset of peer,teacher,judge");
  evaluate->add_option("--out", eval_out, "Pair records JSONL output")
      ->required();
  evaluate->add_option("--limit", eval_limit, "Stop after N new instances");

  // report
  auto* report = app.add_subcommand("report", "Emit metric tables");
  std::string report_pairs;
  std::string report_rubric;
  std::string report_prefix = "report";
  std::string report_group_by = "model,condition";
  std::string report_tiers = "default";
  std::string report_config;
  report->add_option("--pairs", report_pairs, "Pair records JSONL")->required();
  report->add_option("--rubric", report_rubric, "Rubric CSV for kappa");
  report->add_option("--out-prefix", report_prefix, "Output file prefix");
  report->add_option("--group-by", report_group_by,
                     "Factors for eta-squared (model,condition)");
  report->add_option("--tiers", report_tiers, "'default' or a tiers JSON file");
  report->add_option("--config", report_config,
                     "Run config JSON for tiers/weights");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      if (!rules_csv.empty()) {
        build_cfg.enabled_rules.clear();
        std::stringstream ss(rules_csv);
        std::string token;
        while (std::getline(ss, token, ',')) {
          auto rule = rule_from_name(token);
          if (!rule) throw Error("unknown rule '" + token + "'");
          build_cfg.enabled_rules.insert(*rule);
        }
      }
      return run_build_space(problems_dir, build_out, build_cfg);
    }
    if (diagnose->parsed()) {
      return run_diagnose(space_path, state_path, claim_path);
    }
    if (simulate->parsed()) {
      return run_simulate(sim_spaces, sim_states, sim_endpoints, sim_roles,
                          sim_out, sim_limit);
    }
    if (evaluate->parsed()) {
      return run_evaluate(eval_in, eval_endpoints, eval_conditions, eval_out,
                          eval_limit);
    }
    if (report->parsed()) {
      return run_report(report_pairs, report_rubric, report_prefix,
                        report_group_by, report_tiers, report_config);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
