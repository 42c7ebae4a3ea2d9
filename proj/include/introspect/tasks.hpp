#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "introspect/dilemma.hpp"
#include "introspect/gateway.hpp"
#include "introspect/metrics.hpp"
#include "introspect/templates.hpp"

namespace introspect::tasks {

enum class TaskKind {
  kth_word,
  dilemma_calibration,
  paraphrase_recognition,
  prompt_reconstruction,
  heads_up,
};

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);
const std::vector<TaskKind>& all_task_kinds();

struct TaskInstance {
  TaskKind kind = TaskKind::kth_word;
  std::string instance_id;
  nlohmann::json payload;
};

struct TaskResult {
  TaskInstance instance;
  std::string observer_id;
  std::string target_id;
  std::vector<gateway::ChatExchange> transcript;
  nlohmann::json parsed;  // everything needed to re-derive the score
  double score = 0.0;     // in [0,1]
  nlohmann::json detail;  // kind-specific metrics (kl_intro, kl_gut, ...)
  std::vector<std::string> flags;
};

struct RunnerContext {
  gateway::ModelGateway& gw;
  const PromptLibrary& prompts;
  std::uint64_t seed = 0;
  int rollouts = 10;        // dilemma-calibration samples per condition
  int clue_count = 10;      // heads-up clues per instance
  int paraphrase_count = 4;
  int candidate_count = 5;  // question + paraphrases
  double diversity_max_similarity = 0.9;
  int condition_failure_budget = 3;  // tolerated parse failures per condition
};

/// Whitespace-split, per-token punctuation strip, 1-indexed, lowercased.
std::string extract_kth_word(const std::string& text, int k);

/// Case-insensitive match key: punctuation-stripped and lowercased.
std::string normalize_word(const std::string& word);

TaskResult run_kth_word(RunnerContext& ctx, const gateway::ModelSpec& observer,
                        const gateway::ModelSpec& target, const std::string& question, int k,
                        const std::string& instance_id = "");

TaskResult run_dilemma_calibration(RunnerContext& ctx, const gateway::ModelSpec& observer,
                                   const gateway::ModelSpec& target,
                                   const dilemma::DilemmaRecord& record, int n,
                                   bool force_unretained = false,
                                   const std::string& instance_id = "");

std::vector<std::string> generate_paraphrases(RunnerContext& ctx, const std::string& question,
                                              int n, const gateway::ModelSpec& generator);

struct DiversityOutcome {
  std::vector<std::string> responses;
  bool accepted = false;
  double max_similarity = 0.0;
  std::pair<std::size_t, std::size_t> closest_pair{0, 0};
};

/// Target answers every candidate; the instance is accepted only when no two
/// responses embed closer than max_similarity.
DiversityOutcome enforce_response_diversity(RunnerContext& ctx,
                                            const std::vector<std::string>& candidates,
                                            const gateway::ModelSpec& target,
                                            double max_similarity);

TaskResult run_paraphrase_recognition(RunnerContext& ctx, const gateway::ModelSpec& observer,
                                      const gateway::ModelSpec& target,
                                      const std::string& question,
                                      const std::vector<std::string>& candidates,
                                      const std::string& instance_id = "");

TaskResult run_prompt_reconstruction(RunnerContext& ctx, const gateway::ModelSpec& observer,
                                     const gateway::ModelSpec& target,
                                     const std::string& original_prompt,
                                     const std::string& instance_id = "");

TaskResult run_heads_up(RunnerContext& ctx, const gateway::ModelSpec& clue_giver,
                        const gateway::ModelSpec& guesser, const std::string& secret,
                        const std::string& instance_id = "");

/// Pure re-derivation of a result's score from its parsed fields.
double rescore(TaskKind kind, const nlohmann::json& parsed);

struct QuestionCorpus {
  struct Entry {
    std::string id;
    std::string question;
    std::string source;
  };
  std::vector<Entry> questions;

  /// JSON-lines of {id, question}; Dolly-style {instruction, ...} records map
  /// instruction -> question.
  static QuestionCorpus load_jsonl(const std::filesystem::path& path);

  /// Deterministic subset: seeded shuffle, then the first n entries.
  std::vector<Entry> subset(std::size_t n, std::uint64_t seed) const;
};

std::vector<std::string> load_secrets(const std::filesystem::path& path);

}  // namespace introspect::tasks
