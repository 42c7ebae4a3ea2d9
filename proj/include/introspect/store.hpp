#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "introspect/tasks.hpp"

namespace introspect::store {

struct RunManifest {
  std::string run_id;
  std::string config_digest;
  std::string created_at;  // ISO-8601; deterministic in mock mode
  std::vector<std::string> model_roster;
  nlohmann::json task_plan;
  std::string status = "running";  // running | complete | failed
  std::uint64_t seed = 0;
};

/// One diversity-audit instance: each model's response plus its embedding.
struct DiversityRecord {
  tasks::TaskKind kind = tasks::TaskKind::kth_word;
  std::string instance_id;
  std::vector<std::string> model_ids;
  std::vector<std::string> responses;
  std::vector<std::vector<double>> embeddings;
  bool failed = false;
};

/// One paired trace measurement persisted by analyze-traces.
struct TracePairRecord {
  std::string dilemma_id;
  int layer_index = 0;
  double intro_mean_entropy = 0.0;
  double gut_mean_entropy = 0.0;
  std::optional<int> divergence_layer;
};

nlohmann::json result_to_json(const tasks::TaskResult& result);
tasks::TaskResult result_from_json(const nlohmann::json& j);

/// Append-only JSON-lines persistence for one run. A single store directory
/// holds manifest.json, results.jsonl, diversity.jsonl, trace_pairs.jsonl and
/// the reports/ output directory.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path results_path() const { return dir_ / "results.jsonl"; }
  std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }
  std::filesystem::path diversity_path() const { return dir_ / "diversity.jsonl"; }
  std::filesystem::path trace_pairs_path() const { return dir_ / "trace_pairs.jsonl"; }
  std::filesystem::path dilemmas_path() const { return dir_ / "dilemmas.jsonl"; }
  std::filesystem::path reports_dir() const { return dir_ / "reports"; }

  void write_manifest(const RunManifest& manifest);
  std::optional<RunManifest> read_manifest() const;
  void set_status(const std::string& status);

  enum class PersistOutcome { written, already_present };

  /// Idempotent on (instance_id, observer, target); a re-write with different
  /// content raises DuplicateResult instead of overwriting.
  PersistOutcome persist_result(const tasks::TaskResult& result);
  bool has_result(const std::string& instance_id, const std::string& observer_id,
                  const std::string& target_id) const;
  std::vector<tasks::TaskResult> load_results() const;

  void persist_diversity(const DiversityRecord& record);
  std::vector<DiversityRecord> load_diversity() const;

  void persist_trace_pair(const TracePairRecord& record);
  std::vector<TracePairRecord> load_trace_pairs() const;
  void clear_trace_pairs();

 private:
  static std::string result_key(const std::string& instance_id, const std::string& observer_id,
                                const std::string& target_id);
  void append_line(const std::filesystem::path& path, const std::string& line) const;
  void load_result_index();

  std::filesystem::path dir_;
  std::map<std::string, std::string> result_index_;  // key -> canonical line
};

}  // namespace introspect::store
