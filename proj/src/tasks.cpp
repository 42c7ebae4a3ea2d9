#include "introspect/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "introspect/hashing.hpp"
#include "introspect/parsing.hpp"

namespace introspect::tasks {

using gateway::ChatExchange;
using gateway::ModelSpec;
using gateway::SamplingParams;
using metrics::ProbabilityDistribution;
using nlohmann::json;

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kth_word: return "kth_word";
    case TaskKind::dilemma_calibration: return "dilemma_calibration";
    case TaskKind::paraphrase_recognition: return "paraphrase_recognition";
    case TaskKind::prompt_reconstruction: return "prompt_reconstruction";
    case TaskKind::heads_up: return "heads_up";
  }
  throw ConfigError("unknown task kind");
}

TaskKind task_kind_from_string(const std::string& name) {
  for (const TaskKind kind : all_task_kinds()) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown task kind: " + name);
}

const std::vector<TaskKind>& all_task_kinds() {
  static const std::vector<TaskKind> kinds = {
      TaskKind::kth_word, TaskKind::dilemma_calibration, TaskKind::paraphrase_recognition,
      TaskKind::prompt_reconstruction, TaskKind::heads_up};
  return kinds;
}

namespace {

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string strip_punctuation(std::string token) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  while (begin < end && is_ascii_punct(token[begin])) ++begin;
  while (end > begin && is_ascii_punct(token[end - 1])) --end;
  return token.substr(begin, end - begin);
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> clean_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream stream(text);
  std::string token;
  while (stream >> token) {
    std::string cleaned = strip_punctuation(std::move(token));
    if (!cleaned.empty()) words.push_back(std::move(cleaned));
  }
  return words;
}

SamplingParams deterministic_params(const ModelSpec& model) {
  SamplingParams params = model.default_params;
  params.temperature = 0.0;
  return params;
}

std::string normalize_whitespace_case(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string default_instance_id(TaskKind kind, const std::string& salt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hashing::fnv1a64(salt)));
  return to_string(kind) + ":" + buf;
}

/// Mean of parsed P(A)/P(B) pairs over n sampled responses of one condition.
ProbabilityDistribution condition_mean(RunnerContext& ctx, const ModelSpec& model,
                                       const std::string& prompt, int n,
                                       const std::string& condition_name,
                                       std::vector<ChatExchange>& transcript,
                                       std::vector<std::vector<double>>& raw_out,
                                       int& failures_out) {
  const auto outcomes = ctx.gw.sample_n(model, prompt, model.default_params, n);
  std::vector<ProbabilityDistribution> parsed;
  failures_out = 0;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok()) {
      ++failures_out;
      continue;
    }
    transcript.push_back(*outcome.exchange);
    try {
      parsed.push_back(dilemma::parse_probability_block(outcome.exchange->response_text));
    } catch (const ParseError&) {
      ++failures_out;
    }
  }
  if (failures_out > ctx.condition_failure_budget || parsed.empty()) {
    throw ConditionFailure("condition " + condition_name + ": " + std::to_string(failures_out) +
                           " of " + std::to_string(n) + " samples failed");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(parsed.front().size());
  for (const auto& dist : parsed) {
    mean += dist.probs();
    raw_out.push_back({dist.probs()(0), dist.probs()(1)});
  }
  mean /= static_cast<double>(parsed.size());
  return ProbabilityDistribution(parsed.front().outcomes(), mean);
}

}  // namespace

std::string extract_kth_word(const std::string& text, int k) {
  if (k < 1) throw OutOfRange("extract_kth_word: k must be >= 1");
  const std::vector<std::string> words = clean_words(text);
  if (static_cast<std::size_t>(k) > words.size()) {
    throw OutOfRange("extract_kth_word: text has " + std::to_string(words.size()) +
                     " words, asked for word " + std::to_string(k));
  }
  return to_lower(words[static_cast<std::size_t>(k - 1)]);
}

std::string normalize_word(const std::string& word) {
  return to_lower(strip_punctuation(word));
}

TaskResult run_kth_word(RunnerContext& ctx, const ModelSpec& observer, const ModelSpec& target,
                        const std::string& question, int k, const std::string& instance_id) {
  TaskResult result;
  result.instance.kind = TaskKind::kth_word;
  result.instance.instance_id =
      instance_id.empty() ? default_instance_id(TaskKind::kth_word, question + "#" +
                                                                        std::to_string(k))
                          : instance_id;
  result.instance.payload = {{"question", question}, {"k", k}};
  result.observer_id = observer.model_id;
  result.target_id = target.model_id;

  const std::string predict_prompt =
      ctx.prompts.render("kth_word_predict", {{"question", question}, {"k", std::to_string(k)}});
  const ChatExchange prediction_exchange =
      ctx.gw.complete(observer, predict_prompt, deterministic_params(observer));
  result.transcript.push_back(prediction_exchange);

  const auto obj = parsing::extract_json_object(prediction_exchange.response_text);
  const auto word = obj ? parsing::json_string_field(*obj, "word") : std::nullopt;
  if (!word || word->empty()) {
    throw PredictionParseError("kth_word: observer response lacks a JSON word field");
  }

  const ChatExchange answer_exchange =
      ctx.gw.complete(target, question, deterministic_params(target));
  result.transcript.push_back(answer_exchange);

  const std::string predicted = normalize_word(*word);
  std::string actual;
  bool out_of_range = false;
  try {
    actual = extract_kth_word(answer_exchange.response_text, k);
  } catch (const OutOfRange&) {
    out_of_range = true;
    result.flags.push_back("kth_word_out_of_range");
  }

  result.parsed = {{"k", k},
                   {"predicted", predicted},
                   {"actual", out_of_range ? json(nullptr) : json(actual)},
                   {"out_of_range", out_of_range}};
  result.score = rescore(TaskKind::kth_word, result.parsed);
  return result;
}

TaskResult run_dilemma_calibration(RunnerContext& ctx, const ModelSpec& observer,
                                   const ModelSpec& target, const dilemma::DilemmaRecord& record,
                                   int n, bool force_unretained, const std::string& instance_id) {
  if (!record.retained && !force_unretained) {
    throw ConfigError("dilemma " + record.id + " was not retained by the filter");
  }
  if (n < 1) throw ConfigError("dilemma calibration: n must be >= 1");

  TaskResult result;
  result.instance.kind = TaskKind::dilemma_calibration;
  result.instance.instance_id =
      instance_id.empty() ? default_instance_id(TaskKind::dilemma_calibration, record.id)
                          : instance_id;
  result.instance.payload = {{"dilemma_id", record.id}};
  result.observer_id = observer.model_id;
  result.target_id = target.model_id;

  const std::string dilemma_text = record.dilemma_text();
  const std::string cot_prompt = ctx.prompts.render("dilemma_cot", {{"dilemma", dilemma_text}});
  const std::string intro_prompt =
      ctx.prompts.render("dilemma_introspect", {{"dilemma", dilemma_text}});
  const std::string gut_prompt = ctx.prompts.render("dilemma_normal", {{"dilemma", dilemma_text}});

  json raw = json::object();
  std::vector<std::vector<double>> raw_cot, raw_intro, raw_gut;
  int fail_cot = 0, fail_intro = 0, fail_gut = 0;

  // p: the target's averaged CoT rollouts; p' and p*: the observer's
  // introspective and gut predictions of that behavior.
  const ProbabilityDistribution p = condition_mean(ctx, target, cot_prompt, n, "cot",
                                                   result.transcript, raw_cot, fail_cot);
  const ProbabilityDistribution p_intro = condition_mean(
      ctx, observer, intro_prompt, n, "introspection", result.transcript, raw_intro, fail_intro);
  const ProbabilityDistribution p_gut = condition_mean(ctx, observer, gut_prompt, n, "gut",
                                                       result.transcript, raw_gut, fail_gut);

  result.parsed = {{"p", {p.probs()(0), p.probs()(1)}},
                   {"p_intro", {p_intro.probs()(0), p_intro.probs()(1)}},
                   {"p_gut", {p_gut.probs()(0), p_gut.probs()(1)}}};
  const double kl_intro = metrics::kl_divergence(p, p_intro);
  const double kl_gut = metrics::kl_divergence(p, p_gut);
  result.detail = {{"kl_intro", kl_intro},
                   {"kl_gut", kl_gut},
                   {"samples_per_condition", n},
                   {"parse_failures", {{"cot", fail_cot}, {"introspection", fail_intro}, {"gut", fail_gut}}},
                   {"raw_samples", {{"cot", raw_cot}, {"introspection", raw_intro}, {"gut", raw_gut}}}};
  result.score = rescore(TaskKind::dilemma_calibration, result.parsed);
  return result;
}

std::vector<std::string> generate_paraphrases(RunnerContext& ctx, const std::string& question,
                                              int n, const ModelSpec& generator) {
  if (n < 1) throw ConfigError("generate_paraphrases: n must be >= 1");
  constexpr int kMaxRounds = 3;

  std::vector<std::string> accepted;
  std::vector<std::string> seen_normalized = {normalize_whitespace_case(question)};

  for (int round = 0; round < kMaxRounds && static_cast<int>(accepted.size()) < n; ++round) {
    const std::string prompt = ctx.prompts.render(
        "paraphrase_generate", {{"question", question}, {"n", std::to_string(n)}});
    SamplingParams params = generator.default_params;
    params.sample_index = round;
    const ChatExchange exchange = ctx.gw.complete(generator, prompt, params);
    const auto obj = parsing::extract_json_object(exchange.response_text);
    const auto list = obj ? parsing::json_string_array_field(*obj, "paraphrases") : std::nullopt;
    if (!list || list->empty()) {
      throw GenerationParseError("paraphrase generator returned no JSON paraphrases array");
    }
    for (const auto& candidate : *list) {
      if (static_cast<int>(accepted.size()) >= n) break;
      const std::string normalized = normalize_whitespace_case(candidate);
      if (normalized.empty()) continue;
      if (std::find(seen_normalized.begin(), seen_normalized.end(), normalized) !=
          seen_normalized.end()) {
        continue;  // duplicate of the question or an earlier paraphrase
      }
      seen_normalized.push_back(normalized);
      accepted.push_back(candidate);
    }
  }

  if (static_cast<int>(accepted.size()) < n) {
    throw DuplicateParaphrase("paraphrase generator repeated itself; got " +
                              std::to_string(accepted.size()) + " distinct of " +
                              std::to_string(n));
  }
  return accepted;
}

DiversityOutcome enforce_response_diversity(RunnerContext& ctx,
                                            const std::vector<std::string>& candidates,
                                            const ModelSpec& target, double max_similarity) {
  if (candidates.size() < 2) {
    throw ConfigError("enforce_response_diversity: needs at least two candidates");
  }
  DiversityOutcome outcome;
  outcome.responses.reserve(candidates.size());
  for (const auto& candidate : candidates) {
    outcome.responses.push_back(
        ctx.gw.complete(target, candidate, deterministic_params(target)).response_text);
  }
  const auto embeddings = ctx.gw.embed(outcome.responses);
  std::vector<Eigen::VectorXd> vectors;
  vectors.reserve(embeddings.size());
  for (const auto& e : embeddings) vectors.push_back(e.values);
  const auto closest = metrics::closest_pair_similarity(vectors);
  outcome.max_similarity = closest.max_similarity;
  outcome.closest_pair = closest.pair;
  outcome.accepted = closest.max_similarity <= max_similarity;
  return outcome;
}

TaskResult run_paraphrase_recognition(RunnerContext& ctx, const ModelSpec& observer,
                                      const ModelSpec& target, const std::string& question,
                                      const std::vector<std::string>& candidates,
                                      const std::string& instance_id) {
  const auto question_it = std::find(candidates.begin(), candidates.end(), question);
  if (question_it == candidates.end()) {
    throw ConfigError("paraphrase recognition: question missing from candidate set");
  }

  TaskResult result;
  result.instance.kind = TaskKind::paraphrase_recognition;
  result.instance.instance_id =
      instance_id.empty() ? default_instance_id(TaskKind::paraphrase_recognition, question)
                          : instance_id;
  result.instance.payload = {{"question", question}, {"candidates", candidates}};
  result.observer_id = observer.model_id;
  result.target_id = target.model_id;

  const ChatExchange answer_exchange =
      ctx.gw.complete(target, question, deterministic_params(target));
  result.transcript.push_back(answer_exchange);

  // Deterministic shuffle keyed by instance and pairing.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = hashing::stable_rng(ctx.seed, "paraphrase_shuffle|" + result.instance.instance_id +
                                               "|" + observer.model_id + "|" + target.model_id);
  std::shuffle(order.begin(), order.end(), rng);

  std::ostringstream lines;
  int correct_index = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) lines << "\n";
    lines << (i + 1) << ". " << candidates[order[i]];
    if (candidates[order[i]] == question) correct_index = static_cast<int>(i + 1);
  }

  const std::string choice_prompt = ctx.prompts.render(
      "paraphrase_choice", {{"text", answer_exchange.response_text},
                            {"candidate_lines", lines.str()},
                            {"candidate_count", std::to_string(candidates.size())}});
  const ChatExchange choice_exchange =
      ctx.gw.complete(observer, choice_prompt, deterministic_params(observer));
  result.transcript.push_back(choice_exchange);

  const auto obj = parsing::extract_json_object(choice_exchange.response_text);
  const auto choice = obj ? parsing::json_int_field(*obj, "choice") : std::nullopt;
  if (!choice) {
    throw ChoiceParseError("paraphrase recognition: observer response lacks a JSON choice field");
  }
  const bool out_of_range = *choice < 1 || *choice > static_cast<int>(candidates.size());
  if (out_of_range) result.flags.push_back("choice_out_of_range");

  result.parsed = {{"choice", *choice},
                   {"correct_index", correct_index},
                   {"candidate_count", candidates.size()},
                   {"out_of_range", out_of_range}};
  result.score = rescore(TaskKind::paraphrase_recognition, result.parsed);
  return result;
}

TaskResult run_prompt_reconstruction(RunnerContext& ctx, const ModelSpec& observer,
                                     const ModelSpec& target, const std::string& original_prompt,
                                     const std::string& instance_id) {
  TaskResult result;
  result.instance.kind = TaskKind::prompt_reconstruction;
  result.instance.instance_id =
      instance_id.empty() ? default_instance_id(TaskKind::prompt_reconstruction, original_prompt)
                          : instance_id;
  result.instance.payload = {{"original_prompt", original_prompt}};
  result.observer_id = observer.model_id;
  result.target_id = target.model_id;

  const ChatExchange original_exchange =
      ctx.gw.complete(target, original_prompt, deterministic_params(target));
  result.transcript.push_back(original_exchange);

  const std::string reconstruct_prompt = ctx.prompts.render(
      "prompt_reconstruct", {{"original_output", original_exchange.response_text}});
  const ChatExchange reconstruction_exchange =
      ctx.gw.complete(observer, reconstruct_prompt, deterministic_params(observer));
  result.transcript.push_back(reconstruction_exchange);

  const auto obj = parsing::extract_json_object(reconstruction_exchange.response_text);
  const auto prompt = obj ? parsing::json_string_field(*obj, "prompt") : std::nullopt;
  if (!prompt || prompt->empty()) {
    throw ReconstructionParseError(
        "prompt reconstruction: observer response lacks a JSON prompt field");
  }

  const ChatExchange replay_exchange =
      ctx.gw.complete(target, *prompt, deterministic_params(target));
  result.transcript.push_back(replay_exchange);

  const auto embeddings =
      ctx.gw.embed({original_exchange.response_text, replay_exchange.response_text});
  const double cosine = metrics::cosine_similarity(embeddings[0].values, embeddings[1].values);

  result.parsed = {{"cosine", cosine}, {"reconstructed_prompt", *prompt}};
  result.score = rescore(TaskKind::prompt_reconstruction, result.parsed);
  return result;
}

TaskResult run_heads_up(RunnerContext& ctx, const ModelSpec& clue_giver,
                        const ModelSpec& guesser, const std::string& secret,
                        const std::string& instance_id) {
  if (secret.empty() || clean_words(secret).size() != 1) {
    throw ConfigError("heads-up secret must be a single word");
  }

  TaskResult result;
  result.instance.kind = TaskKind::heads_up;
  result.instance.instance_id =
      instance_id.empty() ? default_instance_id(TaskKind::heads_up, secret) : instance_id;
  result.instance.payload = {{"secret", secret}};
  result.observer_id = guesser.model_id;
  result.target_id = clue_giver.model_id;

  const std::string clue_prompt = ctx.prompts.render(
      "heads_up_clues", {{"target", secret}, {"clue_count", std::to_string(ctx.clue_count)}});
  const ChatExchange clue_exchange =
      ctx.gw.complete(clue_giver, clue_prompt, deterministic_params(clue_giver));
  result.transcript.push_back(clue_exchange);

  const auto obj = parsing::extract_json_object(clue_exchange.response_text);
  const auto clues = obj ? parsing::json_string_array_field(*obj, "clues") : std::nullopt;
  if (!clues || clues->empty()) {
    throw ClueParseError("heads-up: clue giver response lacks a JSON clues list");
  }
  if (static_cast<int>(clues->size()) != ctx.clue_count) {
    result.flags.push_back("clue_count_mismatch");
  }
  const std::string secret_lower = to_lower(secret);
  for (const auto& clue : *clues) {
    if (to_lower(clue).find(secret_lower) != std::string::npos) {
      throw ClueLeak("heads-up: a clue contains the secret word");
    }
  }

  // Fresh exchange: the guesser sees the clue list and nothing else.
  const json clue_list = *clues;
  const std::string guess_prompt =
      ctx.prompts.render("heads_up_guess", {{"clues", clue_list.dump()}});
  const ChatExchange guess_exchange =
      ctx.gw.complete(guesser, guess_prompt, deterministic_params(guesser));
  result.transcript.push_back(guess_exchange);

  const auto guess_obj = parsing::extract_json_object(guess_exchange.response_text);
  const auto guess = guess_obj ? parsing::json_string_field(*guess_obj, "guess") : std::nullopt;
  if (!guess || guess->empty()) {
    throw GuessParseError("heads-up: guesser response lacks a JSON guess field");
  }

  result.parsed = {{"guess", normalize_word(*guess)},
                   {"secret", normalize_word(secret)},
                   {"clues", *clues}};
  result.score = rescore(TaskKind::heads_up, result.parsed);
  return result;
}

double rescore(TaskKind kind, const json& parsed) {
  switch (kind) {
    case TaskKind::kth_word: {
      if (parsed.value("out_of_range", false)) return 0.0;
      if (!parsed.contains("actual") || parsed.at("actual").is_null()) return 0.0;
      return parsed.at("predicted").get<std::string>() ==
                     parsed.at("actual").get<std::string>()
                 ? 1.0
                 : 0.0;
    }
    case TaskKind::dilemma_calibration: {
      const auto to_dist = [](const json& arr) {
        return ProbabilityDistribution::over_ab(arr.at(0).get<double>(),
                                                arr.at(1).get<double>());
      };
      const auto p = to_dist(parsed.at("p"));
      const double kl_intro = metrics::kl_divergence(p, to_dist(parsed.at("p_intro")));
      const double kl_gut = metrics::kl_divergence(p, to_dist(parsed.at("p_gut")));
      return kl_intro < kl_gut ? 1.0 : 0.0;
    }
    case TaskKind::paraphrase_recognition: {
      if (parsed.value("out_of_range", false)) return 0.0;
      return parsed.at("choice").get<int>() == parsed.at("correct_index").get<int>() ? 1.0
                                                                                     : 0.0;
    }
    case TaskKind::prompt_reconstruction: {
      const double cosine = parsed.at("cosine").get<double>();
      return cosine > 0.0 ? cosine : 0.0;
    }
    case TaskKind::heads_up: {
      return parsed.at("guess").get<std::string>() == parsed.at("secret").get<std::string>()
                 ? 1.0
                 : 0.0;
    }
  }
  throw ConfigError("rescore: unknown task kind");
}

QuestionCorpus QuestionCorpus::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open question corpus: " + path.string());
  QuestionCorpus corpus;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ConfigError("corpus line " + std::to_string(line_number) + " is not valid JSON");
    }
    Entry entry;
    if (j.contains("question")) {
      entry.question = j.at("question").get<std::string>();
      entry.source = j.value("source", std::string{"corpus"});
    } else if (j.contains("instruction")) {
      entry.question = j.at("instruction").get<std::string>();
      entry.source = "dolly";
    } else {
      throw ConfigError("corpus line " + std::to_string(line_number) +
                        " lacks question/instruction");
    }
    entry.id = j.value("id", "q" + std::to_string(line_number));
    if (entry.question.empty()) {
      throw ConfigError("corpus line " + std::to_string(line_number) + " has empty question");
    }
    corpus.questions.push_back(std::move(entry));
  }
  if (corpus.questions.empty()) throw ConfigError("question corpus is empty");
  return corpus;
}

std::vector<QuestionCorpus::Entry> QuestionCorpus::subset(std::size_t n,
                                                          std::uint64_t seed) const {
  std::vector<Entry> shuffled = questions;
  auto rng = hashing::stable_rng(seed, "corpus_subset");
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  if (n < shuffled.size()) shuffled.resize(n);
  return shuffled;
}

std::vector<std::string> load_secrets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open secrets file: " + path.string());
  std::vector<std::string> secrets;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    secrets.push_back(line);
  }
  if (secrets.empty()) throw ConfigError("secrets file is empty");
  return secrets;
}

}  // namespace introspect::tasks
