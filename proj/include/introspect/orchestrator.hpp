#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "introspect/cross_model.hpp"
#include "introspect/dilemma.hpp"
#include "introspect/gateway.hpp"
#include "introspect/store.hpp"
#include "introspect/tasks.hpp"
#include "introspect/traces.hpp"

namespace introspect::orchestrator {

struct RunConfig {
  std::string run_id = "run";
  std::uint64_t seed = 0;
  bool mock = false;
  int workers = 1;

  std::vector<gateway::ModelSpec> models;
  std::filesystem::path store_dir = "out/run";
  std::filesystem::path corpus_path;
  std::filesystem::path secrets_path;
  std::filesystem::path dilemma_store_path;
  std::filesystem::path template_dir;

  // Judge panel
  std::vector<std::string> judge_ids;
  int samples_per_judge = 5;
  double tau = 0.2;
  int judge_parse_budget = 2;

  // Task parameters
  std::map<std::string, int> task_counts;  // task kind name -> instance count
  std::vector<int> k_values = {1, 2, 3};
  int rollouts = 10;
  int clue_count = 10;
  int paraphrase_count = 4;
  int candidate_count = 5;
  double diversity_max_similarity = 0.9;
  double completion_floor = 0.8;
  double mock_condition_jitter = 0.02;
  bool include_self = true;

  gateway::GatewayConfig gateway_config;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Digest over every semantic field; changes iff the config changes.
  std::string digest() const;
};

struct DilemmaGenerationSummary {
  int generated = 0;
  int skipped_existing = 0;
  int failed = 0;
};

struct FilterSummary {
  int total = 0;
  int retained = 0;
  int errored = 0;
};

struct TraceAnalysisSummary {
  traces::EntropyGapStats stats;
  std::vector<store::TracePairRecord> pairs;
  std::vector<std::pair<std::string, double>> ablation_shares;  // dilemma_id -> share
};

/// Owns the gateway, prompt library, roster, corpora, and run store, and
/// drives every pipeline the CLI exposes. Mock mode installs scripted
/// personas and built-in corpora so the whole engine runs offline.
class Engine {
 public:
  explicit Engine(RunConfig config);

  gateway::ModelGateway& gw() { return *gateway_; }
  store::RunStore& run_store() { return *store_; }
  const RunConfig& config() const { return config_; }
  const std::vector<gateway::ModelSpec>& roster() const { return config_.models; }
  const gateway::ModelSpec& model(const std::string& model_id) const;
  tasks::RunnerContext runner_context();

  void ensure_manifest(const nlohmann::json& task_plan);
  void mark_complete();

  DilemmaGenerationSummary generate_dilemmas(const std::string& generator_id,
                                             const std::filesystem::path& out_path, int limit);
  FilterSummary filter_dilemmas(const std::filesystem::path& in_path,
                                const std::filesystem::path& out_path);

  /// Runs one task kind for a fixed (observer, target) pairing, persisting
  /// each result; already-persisted instances are skipped via store scan.
  std::vector<tasks::TaskResult> run_task_batch(tasks::TaskKind kind,
                                                const std::string& observer_id,
                                                const std::string& target_id, int count);

  cross_model::MatrixBundle run_cross_matrix(const std::vector<cross_model::TaskCount>& counts);

  std::vector<cross_model::DiversityAuditRow> run_diversity_audit(
      const std::vector<tasks::TaskKind>& kinds, int count);

  TraceAnalysisSummary analyze_traces(const std::filesystem::path& intro_dir,
                                      const std::filesystem::path& gut_dir, int layer_index,
                                      double gap,
                                      const std::optional<std::filesystem::path>& ablation_path);

  /// Per-instance scores for one cell; failures are dropped and counted.
  std::vector<double> run_cell_scores(tasks::TaskKind kind, const gateway::ModelSpec& target,
                                      const gateway::ModelSpec& observer, int count,
                                      int* failures = nullptr);

 private:
  struct Instance {
    std::string instance_id;
    std::string question;  // kth_word / paraphrase / reconstruction
    int k = 1;             // kth_word
    std::string secret;    // heads_up
    const dilemma::DilemmaRecord* record = nullptr;  // dilemma_calibration
  };

  std::vector<Instance> plan_instances(tasks::TaskKind kind, int count);
  std::optional<tasks::TaskResult> run_instance(tasks::TaskKind kind, const Instance& instance,
                                                const gateway::ModelSpec& observer,
                                                const gateway::ModelSpec& target);
  const std::vector<dilemma::DilemmaRecord>& retained_dilemmas();
  std::string instance_prompt_for_diversity(tasks::TaskKind kind, const Instance& instance);

  RunConfig config_;
  std::unique_ptr<gateway::ModelGateway> gateway_;
  std::unique_ptr<store::RunStore> store_;
  tasks::PromptLibrary prompts_;
  tasks::QuestionCorpus corpus_;
  std::vector<std::string> secrets_;
  std::vector<dilemma::DilemmaRecord> retained_dilemmas_;
  bool dilemmas_loaded_ = false;
  std::map<std::string, double> score_index_;  // persisted scores by result key
};

}  // namespace introspect::orchestrator
