#include "introspect/store.hpp"

#include <fstream>

namespace introspect::store {

using nlohmann::json;

namespace {

json exchange_to_json(const gateway::ChatExchange& e) {
  return json{{"request_prompt", e.request_prompt},
              {"response_text", e.response_text},
              {"model_id", e.model_id},
              {"temperature", e.params.temperature},
              {"max_tokens", e.params.max_tokens},
              {"sample_index", e.params.sample_index},
              {"latency_ms", e.latency_ms},
              {"cached", e.cached},
              {"retries", e.retries}};
}

gateway::ChatExchange exchange_from_json(const json& j) {
  gateway::ChatExchange e;
  e.request_prompt = j.at("request_prompt").get<std::string>();
  e.response_text = j.at("response_text").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.params.temperature = j.at("temperature").get<double>();
  e.params.max_tokens = j.at("max_tokens").get<int>();
  e.params.sample_index = j.at("sample_index").get<int>();
  e.latency_ms = j.at("latency_ms").get<double>();
  e.cached = j.at("cached").get<bool>();
  e.retries = j.at("retries").get<int>();
  return e;
}

}  // namespace

json result_to_json(const tasks::TaskResult& result) {
  json transcript = json::array();
  for (const auto& e : result.transcript) transcript.push_back(exchange_to_json(e));
  return json{{"kind", tasks::to_string(result.instance.kind)},
              {"instance_id", result.instance.instance_id},
              {"payload", result.instance.payload},
              {"observer", result.observer_id},
              {"target", result.target_id},
              {"transcript", transcript},
              {"parsed", result.parsed},
              {"score", result.score},
              {"detail", result.detail},
              {"flags", result.flags}};
}

tasks::TaskResult result_from_json(const json& j) {
  tasks::TaskResult result;
  result.instance.kind = tasks::task_kind_from_string(j.at("kind").get<std::string>());
  result.instance.instance_id = j.at("instance_id").get<std::string>();
  result.instance.payload = j.at("payload");
  result.observer_id = j.at("observer").get<std::string>();
  result.target_id = j.at("target").get<std::string>();
  for (const auto& e : j.at("transcript")) result.transcript.push_back(exchange_from_json(e));
  result.parsed = j.at("parsed");
  result.score = j.at("score").get<double>();
  result.detail = j.at("detail");
  result.flags = j.at("flags").get<std::vector<std::string>>();
  return result;
}

RunStore::RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  load_result_index();
}

namespace {

json manifest_to_json(const RunManifest& m) {
  return json{{"run_id", m.run_id},      {"config_digest", m.config_digest},
              {"created_at", m.created_at}, {"model_roster", m.model_roster},
              {"task_plan", m.task_plan},   {"status", m.status},
              {"seed", m.seed}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.created_at = j.at("created_at").get<std::string>();
  m.model_roster = j.at("model_roster").get<std::vector<std::string>>();
  m.task_plan = j.at("task_plan");
  m.status = j.at("status").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace

void RunStore::write_manifest(const RunManifest& manifest) {
  std::ofstream out(manifest_path(), std::ios::trunc | std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest: " + manifest_path().string());
  out << manifest_to_json(manifest).dump(2) << "\n";
}

std::optional<RunManifest> RunStore::read_manifest() const {
  std::ifstream in(manifest_path(), std::ios::binary);
  if (!in) return std::nullopt;
  return manifest_from_json(json::parse(in));
}

void RunStore::set_status(const std::string& status) {
  auto manifest = read_manifest();
  if (!manifest) throw ConfigError("run store has no manifest: " + dir_.string());
  manifest->status = status;
  write_manifest(*manifest);
}

std::string RunStore::result_key(const std::string& instance_id, const std::string& observer_id,
                                 const std::string& target_id) {
  return instance_id + "\x1f" + observer_id + "\x1f" + target_id;
}

void RunStore::append_line(const std::filesystem::path& path, const std::string& line) const {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot append to " + path.string());
  // One buffered write per record keeps every line intact on disk.
  out << line + "\n" << std::flush;
}

void RunStore::load_result_index() {
  result_index_.clear();
  std::ifstream in(results_path(), std::ios::binary);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("corrupt results line in " + results_path().string());
    result_index_[result_key(j.at("instance_id").get<std::string>(),
                             j.at("observer").get<std::string>(),
                             j.at("target").get<std::string>())] = j.dump();
  }
}

RunStore::PersistOutcome RunStore::persist_result(const tasks::TaskResult& result) {
  const std::string key =
      result_key(result.instance.instance_id, result.observer_id, result.target_id);
  const std::string canonical = result_to_json(result).dump();
  const auto it = result_index_.find(key);
  if (it != result_index_.end()) {
    if (it->second != canonical) {
      throw DuplicateResult("store already holds a different result for instance " +
                            result.instance.instance_id + " (" + result.observer_id + " -> " +
                            result.target_id + ")");
    }
    return PersistOutcome::already_present;
  }
  append_line(results_path(), canonical);
  result_index_.emplace(key, canonical);
  return PersistOutcome::written;
}

bool RunStore::has_result(const std::string& instance_id, const std::string& observer_id,
                          const std::string& target_id) const {
  return result_index_.count(result_key(instance_id, observer_id, target_id)) > 0;
}

std::vector<tasks::TaskResult> RunStore::load_results() const {
  std::vector<tasks::TaskResult> results;
  std::ifstream in(results_path(), std::ios::binary);
  if (!in) return results;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    results.push_back(result_from_json(json::parse(line)));
  }
  return results;
}

void RunStore::persist_diversity(const DiversityRecord& record) {
  const json j = {{"kind", tasks::to_string(record.kind)},
                  {"instance_id", record.instance_id},
                  {"model_ids", record.model_ids},
                  {"responses", record.responses},
                  {"embeddings", record.embeddings},
                  {"failed", record.failed}};
  append_line(diversity_path(), j.dump());
}

std::vector<DiversityRecord> RunStore::load_diversity() const {
  std::vector<DiversityRecord> records;
  std::ifstream in(diversity_path(), std::ios::binary);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    DiversityRecord record;
    record.kind = tasks::task_kind_from_string(j.at("kind").get<std::string>());
    record.instance_id = j.at("instance_id").get<std::string>();
    record.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    record.responses = j.at("responses").get<std::vector<std::string>>();
    record.embeddings = j.at("embeddings").get<std::vector<std::vector<double>>>();
    record.failed = j.at("failed").get<bool>();
    records.push_back(std::move(record));
  }
  return records;
}

void RunStore::persist_trace_pair(const TracePairRecord& record) {
  json j = {{"dilemma_id", record.dilemma_id},
            {"layer_index", record.layer_index},
            {"intro_mean_entropy", record.intro_mean_entropy},
            {"gut_mean_entropy", record.gut_mean_entropy}};
  if (record.divergence_layer) j["divergence_layer"] = *record.divergence_layer;
  append_line(trace_pairs_path(), j.dump());
}

std::vector<TracePairRecord> RunStore::load_trace_pairs() const {
  std::vector<TracePairRecord> records;
  std::ifstream in(trace_pairs_path(), std::ios::binary);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TracePairRecord record;
    record.dilemma_id = j.at("dilemma_id").get<std::string>();
    record.layer_index = j.at("layer_index").get<int>();
    record.intro_mean_entropy = j.at("intro_mean_entropy").get<double>();
    record.gut_mean_entropy = j.at("gut_mean_entropy").get<double>();
    if (j.contains("divergence_layer")) record.divergence_layer = j.at("divergence_layer").get<int>();
    records.push_back(std::move(record));
  }
  return records;
}

void RunStore::clear_trace_pairs() {
  std::error_code ec;
  std::filesystem::remove(trace_pairs_path(), ec);
}

}  // namespace introspect::store
