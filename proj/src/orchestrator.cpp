#include "introspect/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "introspect/digest.hpp"
#include "introspect/hashing.hpp"
#include "introspect/mock.hpp"

namespace introspect::orchestrator {

using gateway::ModelKind;
using gateway::ModelSpec;
using nlohmann::json;
using tasks::TaskKind;

namespace {

ModelSpec model_from_json(const json& j) {
  ModelSpec spec;
  spec.model_id = j.at("model_id").get<std::string>();
  const std::string kind = j.value("kind", "remote");
  if (kind == "remote") {
    spec.kind = ModelKind::remote;
  } else if (kind == "scripted") {
    spec.kind = ModelKind::scripted;
  } else {
    throw ConfigError("model kind must be remote or scripted: " + kind);
  }
  spec.default_params.temperature = j.value("temperature", 0.0);
  spec.default_params.max_tokens = j.value("max_tokens", 1024);
  return spec;
}

json model_to_json(const ModelSpec& spec) {
  return json{{"model_id", spec.model_id},
              {"kind", spec.kind == ModelKind::remote ? "remote" : "scripted"},
              {"temperature", spec.default_params.temperature},
              {"max_tokens", spec.default_params.max_tokens}};
}

std::string result_key(const std::string& instance_id, const std::string& observer_id,
                       const std::string& target_id) {
  return instance_id + "\x1f" + observer_id + "\x1f" + target_id;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig config;
  config.run_id = j.value("run_id", config.run_id);
  config.seed = j.value("seed", config.seed);
  config.mock = j.value("mock", config.mock);
  config.workers = j.value("workers", config.workers);
  if (j.contains("models")) {
    for (const auto& mj : j.at("models")) config.models.push_back(model_from_json(mj));
  }
  if (j.contains("store_dir")) config.store_dir = j.at("store_dir").get<std::string>();
  if (j.contains("corpus")) config.corpus_path = j.at("corpus").get<std::string>();
  if (j.contains("secrets")) config.secrets_path = j.at("secrets").get<std::string>();
  if (j.contains("dilemma_store")) {
    config.dilemma_store_path = j.at("dilemma_store").get<std::string>();
  }
  if (j.contains("template_dir")) config.template_dir = j.at("template_dir").get<std::string>();

  if (j.contains("panel")) {
    const auto& p = j.at("panel");
    if (p.contains("judges")) config.judge_ids = p.at("judges").get<std::vector<std::string>>();
    config.samples_per_judge = p.value("samples_per_judge", config.samples_per_judge);
    config.tau = p.value("threshold", config.tau);
    config.judge_parse_budget = p.value("parse_failure_budget", config.judge_parse_budget);
  }
  if (j.contains("tasks")) {
    for (const auto& [name, value] : j.at("tasks").items()) {
      tasks::task_kind_from_string(name);  // validates
      config.task_counts[name] = value.is_object() ? value.value("count", 1) : value.get<int>();
    }
  }
  if (j.contains("k_values")) config.k_values = j.at("k_values").get<std::vector<int>>();
  config.rollouts = j.value("rollouts", config.rollouts);
  config.clue_count = j.value("clues", config.clue_count);
  config.paraphrase_count = j.value("paraphrases", config.paraphrase_count);
  config.candidate_count = j.value("candidates", config.candidate_count);
  config.diversity_max_similarity =
      j.value("diversity_max_similarity", config.diversity_max_similarity);
  config.completion_floor = j.value("completion_floor", config.completion_floor);
  config.mock_condition_jitter = j.value("mock_condition_jitter", config.mock_condition_jitter);
  config.include_self = j.value("include_self", config.include_self);

  if (j.contains("gateway")) {
    const auto& g = j.at("gateway");
    config.gateway_config.base_url = g.value("base_url", std::string{});
    config.gateway_config.embedding_model =
        g.value("embedding_model", config.gateway_config.embedding_model);
    config.gateway_config.max_attempts =
        g.value("max_attempts", config.gateway_config.max_attempts);
    config.gateway_config.backoff_initial_ms =
        g.value("backoff_initial_ms", config.gateway_config.backoff_initial_ms);
    config.gateway_config.backoff_max_ms =
        g.value("backoff_max_ms", config.gateway_config.backoff_max_ms);
    config.gateway_config.timeout_seconds =
        g.value("timeout_seconds", config.gateway_config.timeout_seconds);
    config.gateway_config.max_in_flight =
        g.value("max_in_flight", config.gateway_config.max_in_flight);
    config.gateway_config.caching = g.value("caching", config.gateway_config.caching);
    if (g.contains("cache_dir")) {
      config.gateway_config.cache_dir = g.at("cache_dir").get<std::string>();
    }
  }
  return config;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
  return from_json(j);
}

json RunConfig::to_json() const {
  json models = json::array();
  for (const auto& m : this->models) models.push_back(model_to_json(m));
  return json{{"run_id", run_id},
              {"seed", seed},
              {"mock", mock},
              {"workers", workers},
              {"models", models},
              {"store_dir", store_dir.string()},
              {"corpus", corpus_path.string()},
              {"secrets", secrets_path.string()},
              {"dilemma_store", dilemma_store_path.string()},
              {"template_dir", template_dir.string()},
              {"panel",
               {{"judges", judge_ids},
                {"samples_per_judge", samples_per_judge},
                {"threshold", tau},
                {"parse_failure_budget", judge_parse_budget}}},
              {"tasks", task_counts},
              {"k_values", k_values},
              {"rollouts", rollouts},
              {"clues", clue_count},
              {"paraphrases", paraphrase_count},
              {"candidates", candidate_count},
              {"diversity_max_similarity", diversity_max_similarity},
              {"completion_floor", completion_floor},
              {"mock_condition_jitter", mock_condition_jitter},
              {"include_self", include_self},
              {"gateway",
               {{"base_url", gateway_config.base_url},
                {"embedding_model", gateway_config.embedding_model},
                {"max_attempts", gateway_config.max_attempts},
                {"timeout_seconds", gateway_config.timeout_seconds},
                {"max_in_flight", gateway_config.max_in_flight},
                {"caching", gateway_config.caching},
                {"cache_dir", gateway_config.cache_dir.string()}}}};
}

std::string RunConfig::digest() const { return digest::sha256_hex(to_json().dump()); }

Engine::Engine(RunConfig config)
    : config_(std::move(config)), prompts_(tasks::PromptLibrary::builtin()) {
  if (!config_.template_dir.empty()) {
    prompts_ = tasks::PromptLibrary::from_directory(config_.template_dir);
  }

  gateway::GatewayConfig gw_config = config_.gateway_config;
  gw_config.seed = config_.seed;
  gw_config.apply_env();
  gateway_ = std::make_unique<gateway::ModelGateway>(std::move(gw_config));

  if (config_.mock) {
    std::vector<std::string> names;
    if (config_.models.empty()) {
      names = {"mock/alpha", "mock/bravo", "mock/charlie"};
    } else {
      for (const auto& m : config_.models) names.push_back(m.model_id);
    }
    config_.models =
        mock::install_mock_roster(*gateway_, names, config_.mock_condition_jitter);
  }
  if (config_.models.empty()) throw ConfigError("config lists no models");
  {
    std::set<std::string> ids;
    for (const auto& m : config_.models) {
      if (m.model_id.empty() || !ids.insert(m.model_id).second) {
        throw ConfigError("model ids must be non-empty and unique");
      }
    }
  }
  if (config_.judge_ids.empty()) {
    for (const auto& m : config_.models) {
      if (config_.judge_ids.size() >= 3) break;
      config_.judge_ids.push_back(m.model_id);
    }
  }

  if (!config_.corpus_path.empty()) {
    corpus_ = tasks::QuestionCorpus::load_jsonl(config_.corpus_path);
  } else if (config_.mock) {
    int line = 0;
    for (const auto& q : mock::mock_questions(60)) {
      corpus_.questions.push_back({"q" + std::to_string(++line), q, "mock"});
    }
  }
  if (!config_.secrets_path.empty()) {
    secrets_ = tasks::load_secrets(config_.secrets_path);
  } else if (config_.mock) {
    secrets_ = mock::mock_secrets(60);
  }

  store_ = std::make_unique<store::RunStore>(config_.store_dir);
  for (const auto& result : store_->load_results()) {
    score_index_[result_key(result.instance.instance_id, result.observer_id,
                            result.target_id)] = result.score;
  }
}

const ModelSpec& Engine::model(const std::string& model_id) const {
  for (const auto& m : config_.models) {
    if (m.model_id == model_id) return m;
  }
  throw ConfigError("model not in roster: " + model_id);
}

tasks::RunnerContext Engine::runner_context() {
  tasks::RunnerContext ctx{*gateway_, prompts_};
  ctx.seed = config_.seed;
  ctx.rollouts = config_.rollouts;
  ctx.clue_count = config_.clue_count;
  ctx.paraphrase_count = config_.paraphrase_count;
  ctx.candidate_count = config_.candidate_count;
  ctx.diversity_max_similarity = config_.diversity_max_similarity;
  return ctx;
}

void Engine::ensure_manifest(const json& task_plan) {
  const std::string digest = config_.digest();
  if (const auto existing = store_->read_manifest()) {
    if (existing->config_digest != digest) {
      throw ConfigError("store " + config_.store_dir.string() +
                        " was created with a different config; use a fresh store directory");
    }
    if (existing->status != "running") store_->set_status("running");
    return;
  }
  store::RunManifest manifest;
  manifest.run_id = config_.run_id;
  manifest.config_digest = digest;
  // Mock runs pin the timestamp so replays are byte-identical.
  manifest.created_at = config_.mock ? "1970-01-01T00:00:00Z" : [] {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  }();
  for (const auto& m : config_.models) manifest.model_roster.push_back(m.model_id);
  manifest.task_plan = task_plan;
  manifest.status = "running";
  manifest.seed = config_.seed;
  store_->write_manifest(manifest);
}

void Engine::mark_complete() { store_->set_status("complete"); }

DilemmaGenerationSummary Engine::generate_dilemmas(const std::string& generator_id,
                                                   const std::filesystem::path& out_path,
                                                   int limit) {
  const ModelSpec& generator = model(generator_id);
  dilemma::ForgeContext ctx{*gateway_, prompts_};

  std::set<std::string> existing_ids;
  if (std::filesystem::exists(out_path)) {
    for (const auto& record : dilemma::load_records(out_path)) existing_ids.insert(record.id);
  }

  DilemmaGenerationSummary summary;
  auto combos = dilemma::enumerate_axes();
  if (limit > 0 && static_cast<std::size_t>(limit) < combos.size()) {
    combos.resize(static_cast<std::size_t>(limit));
  }
  std::vector<dilemma::DilemmaRecord> fresh;
  for (const auto& combo : combos) {
    char id[16];
    std::snprintf(id, sizeof(id), "d%03d", combo.lexicographic_index());
    if (existing_ids.count(id) > 0) {
      ++summary.skipped_existing;
      continue;
    }
    try {
      fresh.push_back(dilemma::generate_dilemma(combo, generator, ctx));
      ++summary.generated;
    } catch (const Error&) {
      ++summary.failed;
    }
  }
  dilemma::append_records(out_path, fresh);
  return summary;
}

FilterSummary Engine::filter_dilemmas(const std::filesystem::path& in_path,
                                      const std::filesystem::path& out_path) {
  if (in_path == out_path) {
    throw ConfigError("filter output must differ from its input store");
  }
  auto records = dilemma::load_records(in_path);

  dilemma::JudgePanel panel;
  for (const auto& judge_id : config_.judge_ids) panel.judges.push_back(model(judge_id));
  panel.samples_per_judge = config_.samples_per_judge;
  panel.threshold = config_.tau;
  panel.parse_failure_budget = config_.judge_parse_budget;

  dilemma::ForgeContext ctx{*gateway_, prompts_};
  const auto retained = dilemma::controversiality_filter(records, panel, ctx);

  std::filesystem::remove(out_path);
  dilemma::append_records(out_path, records);

  FilterSummary summary;
  summary.total = static_cast<int>(records.size());
  summary.retained = static_cast<int>(retained.size());
  for (const auto& record : records) {
    if (record.errored) ++summary.errored;
  }
  return summary;
}

const std::vector<dilemma::DilemmaRecord>& Engine::retained_dilemmas() {
  if (!dilemmas_loaded_) {
    if (config_.dilemma_store_path.empty() ||
        !std::filesystem::exists(config_.dilemma_store_path)) {
      throw ConfigError("dilemma store not configured or missing; run gen-dilemmas and filter");
    }
    for (auto& record : dilemma::load_records(config_.dilemma_store_path)) {
      if (record.retained) retained_dilemmas_.push_back(std::move(record));
    }
    std::sort(retained_dilemmas_.begin(), retained_dilemmas_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    dilemmas_loaded_ = true;
  }
  if (retained_dilemmas_.empty()) {
    throw ConfigError("dilemma store holds no retained dilemmas");
  }
  return retained_dilemmas_;
}

std::vector<Engine::Instance> Engine::plan_instances(TaskKind kind, int count) {
  std::vector<Instance> instances;
  const std::uint64_t kind_seed =
      hashing::combine(config_.seed, hashing::fnv1a64(tasks::to_string(kind)));

  switch (kind) {
    case TaskKind::kth_word: {
      if (corpus_.questions.empty()) throw ConfigError("no question corpus configured");
      const auto entries = corpus_.subset(static_cast<std::size_t>(count), kind_seed);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        Instance inst;
        inst.k = config_.k_values[i % config_.k_values.size()];
        inst.question = entries[i].question;
        inst.instance_id = "kth:" + entries[i].id + ":k" + std::to_string(inst.k);
        instances.push_back(std::move(inst));
      }
      break;
    }
    case TaskKind::paraphrase_recognition:
    case TaskKind::prompt_reconstruction: {
      if (corpus_.questions.empty()) throw ConfigError("no question corpus configured");
      const auto entries = corpus_.subset(static_cast<std::size_t>(count), kind_seed);
      const std::string prefix =
          kind == TaskKind::paraphrase_recognition ? "para:" : "rec:";
      for (const auto& entry : entries) {
        Instance inst;
        inst.question = entry.question;
        inst.instance_id = prefix + entry.id;
        instances.push_back(std::move(inst));
      }
      break;
    }
    case TaskKind::heads_up: {
      if (secrets_.empty()) throw ConfigError("no secrets list configured");
      for (int i = 0; i < count && i < static_cast<int>(secrets_.size()); ++i) {
        Instance inst;
        inst.secret = secrets_[static_cast<std::size_t>(i)];
        inst.instance_id = "heads:" + inst.secret;
        instances.push_back(std::move(inst));
      }
      break;
    }
    case TaskKind::dilemma_calibration: {
      const auto& records = retained_dilemmas();
      for (int i = 0; i < count && i < static_cast<int>(records.size()); ++i) {
        Instance inst;
        inst.record = &records[static_cast<std::size_t>(i)];
        inst.instance_id = "cal:" + inst.record->id;
        instances.push_back(std::move(inst));
      }
      break;
    }
  }
  if (instances.empty()) throw ConfigError("no instances could be planned for task");
  return instances;
}

std::optional<tasks::TaskResult> Engine::run_instance(TaskKind kind, const Instance& instance,
                                                      const ModelSpec& observer,
                                                      const ModelSpec& target) {
  tasks::RunnerContext ctx = runner_context();
  switch (kind) {
    case TaskKind::kth_word:
      return tasks::run_kth_word(ctx, observer, target, instance.question, instance.k,
                                 instance.instance_id);
    case TaskKind::dilemma_calibration:
      return tasks::run_dilemma_calibration(ctx, observer, target, *instance.record,
                                            config_.rollouts, /*force_unretained=*/false,
                                            instance.instance_id);
    case TaskKind::paraphrase_recognition: {
      std::vector<std::string> candidates = {instance.question};
      const auto paraphrases = tasks::generate_paraphrases(
          ctx, instance.question, config_.candidate_count - 1, target);
      candidates.insert(candidates.end(), paraphrases.begin(), paraphrases.end());
      const auto diversity = tasks::enforce_response_diversity(
          ctx, candidates, target, config_.diversity_max_similarity);
      if (!diversity.accepted) return std::nullopt;  // excluded instance, counted by caller
      return tasks::run_paraphrase_recognition(ctx, observer, target, instance.question,
                                               candidates, instance.instance_id);
    }
    case TaskKind::prompt_reconstruction:
      return tasks::run_prompt_reconstruction(ctx, observer, target, instance.question,
                                              instance.instance_id);
    case TaskKind::heads_up:
      return tasks::run_heads_up(ctx, target, observer, instance.secret, instance.instance_id);
  }
  throw ConfigError("unknown task kind");
}

std::vector<tasks::TaskResult> Engine::run_task_batch(TaskKind kind,
                                                      const std::string& observer_id,
                                                      const std::string& target_id, int count) {
  const ModelSpec& observer = model(observer_id);
  const ModelSpec& target = model(target_id);
  std::vector<tasks::TaskResult> results;
  for (const auto& instance : plan_instances(kind, count)) {
    if (store_->has_result(instance.instance_id, observer_id, target_id)) continue;
    std::optional<tasks::TaskResult> result;
    try {
      result = run_instance(kind, instance, observer, target);
    } catch (const Error&) {
      continue;  // failed instances stay missing; cells track completion counts
    }
    if (!result) continue;
    store_->persist_result(*result);
    score_index_[result_key(instance.instance_id, observer_id, target_id)] = result->score;
    results.push_back(std::move(*result));
  }
  return results;
}

std::vector<double> Engine::run_cell_scores(TaskKind kind, const ModelSpec& target,
                                            const ModelSpec& observer, int count,
                                            int* failures) {
  std::vector<double> scores;
  int failed = 0;
  for (const auto& instance : plan_instances(kind, count)) {
    const std::string key = result_key(instance.instance_id, observer.model_id, target.model_id);
    const auto it = score_index_.find(key);
    if (it != score_index_.end()) {
      scores.push_back(it->second);
      continue;
    }
    std::optional<tasks::TaskResult> result;
    try {
      result = run_instance(kind, instance, observer, target);
    } catch (const Error&) {
      ++failed;
      continue;
    }
    if (!result) {
      ++failed;
      continue;
    }
    store_->persist_result(*result);
    score_index_[key] = result->score;
    scores.push_back(result->score);
  }
  if (failures) *failures = failed;
  return scores;
}

cross_model::MatrixBundle Engine::run_cross_matrix(
    const std::vector<cross_model::TaskCount>& counts) {
  cross_model::MatrixRunPlan plan;
  plan.models = config_.models;
  plan.task_counts = counts;
  plan.seed = config_.seed;
  plan.include_self = config_.include_self;

  if (config_.workers <= 1) {
    const auto runner = [this](TaskKind kind, const ModelSpec& target, const ModelSpec& observer,
                               int count) {
      return run_cell_scores(kind, target, observer, count, nullptr);
    };
    return cross_model::build_matrix(plan, runner, config_.completion_floor);
  }

  // Multi-worker mode: cells are computed concurrently, then persisted in one
  // deterministic pass after they all settle, so the store stays replayable.
  struct CellJob {
    TaskKind kind = TaskKind::kth_word;
    std::string target_id;
    std::string observer_id;
    int count = 0;
    std::map<std::string, std::optional<tasks::TaskResult>> fresh;  // instance -> result/failure
  };
  for (const auto& tc : counts) {
    if (tc.kind == TaskKind::dilemma_calibration) {
      retained_dilemmas();  // load before the parallel phase
      break;
    }
  }
  std::vector<CellJob> jobs;
  for (const auto& tc : counts) {
    for (const auto& target : plan.models) {
      for (const auto& observer : plan.models) {
        if (!plan.include_self && target.model_id == observer.model_id) continue;
        jobs.push_back(CellJob{tc.kind, target.model_id, observer.model_id, tc.count, {}});
      }
    }
  }

  std::atomic<std::size_t> next_job{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t index = next_job.fetch_add(1);
      if (index >= jobs.size()) return;
      CellJob& job = jobs[index];
      const ModelSpec& target = model(job.target_id);
      const ModelSpec& observer = model(job.observer_id);
      for (const auto& instance : plan_instances(job.kind, job.count)) {
        if (store_->has_result(instance.instance_id, job.observer_id, job.target_id)) continue;
        try {
          job.fresh[instance.instance_id] = run_instance(job.kind, instance, observer, target);
        } catch (const Error&) {
          job.fresh[instance.instance_id] = std::nullopt;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int worker_count = std::min<int>(config_.workers, static_cast<int>(jobs.size()));
  pool.reserve(static_cast<std::size_t>(worker_count));
  for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::map<std::string, CellJob*> job_by_key;
  for (auto& job : jobs) {
    job_by_key[tasks::to_string(job.kind) + "\x1f" + job.target_id + "\x1f" + job.observer_id] =
        &job;
  }
  const auto runner = [&](TaskKind kind, const ModelSpec& target, const ModelSpec& observer,
                          int count) {
    CellJob& job = *job_by_key.at(tasks::to_string(kind) + "\x1f" + target.model_id + "\x1f" +
                                  observer.model_id);
    std::vector<double> scores;
    for (const auto& instance : plan_instances(kind, count)) {
      const std::string key =
          result_key(instance.instance_id, observer.model_id, target.model_id);
      if (const auto it = score_index_.find(key); it != score_index_.end()) {
        scores.push_back(it->second);
        continue;
      }
      const auto fresh_it = job.fresh.find(instance.instance_id);
      if (fresh_it == job.fresh.end() || !fresh_it->second) continue;  // failed instance
      store_->persist_result(*fresh_it->second);
      score_index_[key] = fresh_it->second->score;
      scores.push_back(fresh_it->second->score);
    }
    return scores;
  };
  return cross_model::build_matrix(plan, runner, config_.completion_floor);
}

std::string Engine::instance_prompt_for_diversity(TaskKind kind, const Instance& instance) {
  switch (kind) {
    case TaskKind::kth_word:
    case TaskKind::paraphrase_recognition:
    case TaskKind::prompt_reconstruction:
      return instance.question;
    case TaskKind::heads_up:
      return prompts_.render("heads_up_clues",
                             {{"target", instance.secret},
                              {"clue_count", std::to_string(config_.clue_count)}});
    case TaskKind::dilemma_calibration:
      return prompts_.render("dilemma_normal", {{"dilemma", instance.record->dilemma_text()}});
  }
  throw ConfigError("unknown task kind");
}

std::vector<cross_model::DiversityAuditRow> Engine::run_diversity_audit(
    const std::vector<TaskKind>& kinds, int count) {
  if (config_.models.size() < 2) throw ConfigError("diversity audit needs at least two models");

  // Resume via the diversity store: instances already audited are reused.
  std::map<std::string, store::DiversityRecord> existing;
  for (auto& record : store_->load_diversity()) {
    existing[tasks::to_string(record.kind) + "\x1f" + record.instance_id] = std::move(record);
  }

  std::vector<cross_model::DiversityAuditRow> rows;
  for (const TaskKind kind : kinds) {
    std::vector<cross_model::InstanceResponses> instances;
    int excluded = 0;
    for (const auto& instance : plan_instances(kind, count)) {
      const std::string key = tasks::to_string(kind) + "\x1f" + instance.instance_id;
      if (const auto it = existing.find(key); it != existing.end()) {
        if (it->second.failed) {
          ++excluded;
        } else {
          cross_model::InstanceResponses vectors;
          for (const auto& values : it->second.embeddings) {
            vectors.push_back(Eigen::Map<const Eigen::VectorXd>(
                values.data(), static_cast<Eigen::Index>(values.size())));
          }
          instances.push_back(std::move(vectors));
        }
        continue;
      }
      store::DiversityRecord record;
      record.kind = kind;
      record.instance_id = instance.instance_id;
      const std::string prompt = instance_prompt_for_diversity(kind, instance);
      try {
        std::vector<std::string> responses;
        for (const auto& m : config_.models) {
          gateway::SamplingParams params = m.default_params;
          params.temperature = 0.0;
          responses.push_back(gateway_->complete(m, prompt, params).response_text);
          record.model_ids.push_back(m.model_id);
        }
        const auto embeddings = gateway_->embed(responses);
        cross_model::InstanceResponses vectors;
        for (const auto& e : embeddings) {
          vectors.push_back(e.values);
          record.embeddings.emplace_back(e.values.data(), e.values.data() + e.values.size());
        }
        record.responses = std::move(responses);
        instances.push_back(std::move(vectors));
      } catch (const Error&) {
        record.failed = true;
        ++excluded;
      }
      store_->persist_diversity(record);
    }
    rows.push_back(cross_model::diversity_row(kind, instances, excluded));
  }
  return rows;
}

TraceAnalysisSummary Engine::analyze_traces(
    const std::filesystem::path& intro_dir, const std::filesystem::path& gut_dir,
    int layer_index, double gap, const std::optional<std::filesystem::path>& ablation_path) {
  const auto intro_traces = traces::load_trace_dir(intro_dir);
  const auto gut_traces = traces::load_trace_dir(gut_dir);

  TraceAnalysisSummary summary;
  summary.stats = traces::entropy_gap_stats(intro_traces, gut_traces, layer_index);

  std::map<std::string, const traces::ActivationTrace*> gut_by_id;
  for (const auto& trace : gut_traces) gut_by_id[trace.dilemma_id] = &trace;

  store_->clear_trace_pairs();
  for (const auto& intro : intro_traces) {
    const auto* gut = gut_by_id.at(intro.dilemma_id);
    store::TracePairRecord record;
    record.dilemma_id = intro.dilemma_id;
    record.layer_index = layer_index;
    const auto mean_of = [&](const traces::ActivationTrace& trace) {
      const auto entropies = traces::attention_entropy_profile(trace, layer_index);
      double sum = 0.0;
      for (const double e : entropies) sum += e;
      return sum / static_cast<double>(entropies.size());
    };
    record.intro_mean_entropy = mean_of(intro);
    record.gut_mean_entropy = mean_of(*gut);
    record.divergence_layer = traces::divergence_layer(intro, *gut, gap);
    summary.pairs.push_back(record);
    store_->persist_trace_pair(record);
  }

  if (ablation_path) {
    for (const auto& record : traces::load_ablation_records(*ablation_path)) {
      summary.ablation_shares.emplace_back(record.dilemma_id, traces::ablation_share(record));
    }
  }
  return summary;
}

}  // namespace introspect::orchestrator
