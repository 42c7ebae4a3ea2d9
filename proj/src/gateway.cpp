#include "introspect/gateway.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "http_support.hpp"
#include "introspect/digest.hpp"
#include "introspect/hashing.hpp"

namespace introspect::gateway {

using nlohmann::json;

ScriptedModel& ScriptedModel::add_rule(Matcher matches, Responder respond) {
  rules_.push_back(Rule{std::move(matches), std::move(respond)});
  return *this;
}

ScriptedModel& ScriptedModel::on_substring(const std::string& needle, Responder respond) {
  return add_rule(
      [needle](const std::string& prompt) { return prompt.find(needle) != std::string::npos; },
      std::move(respond));
}

ScriptedModel& ScriptedModel::fallback(Responder respond) {
  fallback_ = std::move(respond);
  return *this;
}

ScriptedModel& ScriptedModel::fallback_text(std::string text) {
  return fallback([text = std::move(text)](const std::string&, const SamplingParams&,
                                           std::uint64_t) { return text; });
}

std::string ScriptedModel::respond(const std::string& prompt, const SamplingParams& params,
                                   std::uint64_t seed) const {
  for (const auto& rule : rules_) {
    if (rule.matches(prompt)) return rule.respond(prompt, params, seed);
  }
  if (fallback_) return fallback_(prompt, params, seed);
  throw ProviderError("scripted model has no rule matching the prompt");
}

ScriptedEmbedder hashing_embedder(int dim, std::uint64_t seed) {
  return [dim, seed](const std::string& text) {
    auto rng = hashing::stable_rng(seed, text);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    const double norm = v.norm();
    return norm == 0.0 ? v : Eigen::VectorXd(v / norm);
  };
}

ScriptedEmbedder orthogonal_embedder(int dim) {
  return [dim](const std::string& text) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v(static_cast<Eigen::Index>(hashing::fnv1a64(text) % static_cast<std::uint64_t>(dim))) = 1.0;
    return v;
  };
}

void GatewayConfig::apply_env() {
  if (const char* url = std::getenv("GATEWAY_BASE_URL")) base_url = url;
  if (const char* key = std::getenv("GATEWAY_API_KEY")) api_key = key;
}

void ModelGateway::InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void ModelGateway::InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

ModelGateway::ModelGateway(GatewayConfig config)
    : config_(std::move(config)),
      limiter_(std::make_unique<InFlightLimiter>(std::max(1, config_.max_in_flight))) {
  if (config_.caching && !config_.cache_dir.empty()) {
    std::filesystem::create_directories(config_.cache_dir);
  }
}

void ModelGateway::register_scripted(const std::string& model_id, ScriptedModel model) {
  scripted_[model_id] = std::move(model);
}

void ModelGateway::set_embedder(ScriptedEmbedder embedder) { embedder_ = std::move(embedder); }

std::string ModelGateway::cache_key(const std::string& model_id, const std::string& prompt,
                                    const SamplingParams& params) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "\x1f%.17g\x1f%d\x1f%d", params.temperature, params.max_tokens,
                params.sample_index);
  return digest::sha256_hex(model_id + '\x1f' + prompt + buf);
}

namespace {

json exchange_to_json(const ChatExchange& e) {
  return json{{"model_id", e.model_id},
              {"request_prompt", e.request_prompt},
              {"response_text", e.response_text},
              {"temperature", e.params.temperature},
              {"max_tokens", e.params.max_tokens},
              {"sample_index", e.params.sample_index},
              {"latency_ms", e.latency_ms},
              {"retries", e.retries}};
}

ChatExchange exchange_from_json(const json& j) {
  ChatExchange e;
  e.model_id = j.at("model_id").get<std::string>();
  e.request_prompt = j.at("request_prompt").get<std::string>();
  e.response_text = j.at("response_text").get<std::string>();
  e.params.temperature = j.at("temperature").get<double>();
  e.params.max_tokens = j.at("max_tokens").get<int>();
  e.params.sample_index = j.at("sample_index").get<int>();
  e.latency_ms = j.at("latency_ms").get<double>();
  e.retries = j.at("retries").get<int>();
  return e;
}

struct ParsedBaseUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // e.g. /v1
};

ParsedBaseUrl parse_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("gateway base url must include a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

}  // namespace

std::optional<ChatExchange> ModelGateway::cache_load(const std::string& key) const {
  if (!config_.caching || config_.cache_dir.empty()) return std::nullopt;
  const auto path = config_.cache_dir / (key + ".json");
  std::lock_guard lock(cache_mutex_);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  ChatExchange e = exchange_from_json(j);
  e.cached = true;
  return e;
}

void ModelGateway::cache_store(const std::string& key, const ChatExchange& exchange) const {
  if (!config_.caching || config_.cache_dir.empty()) return;
  const auto path = config_.cache_dir / (key + ".json");
  const std::string body = exchange_to_json(exchange).dump(2) + "\n";
  std::lock_guard lock(cache_mutex_);
  std::ofstream out(path, std::ios::trunc);
  out << body;
}

ChatExchange ModelGateway::complete(const ModelSpec& model, const std::string& prompt) {
  return complete(model, prompt, model.default_params);
}

ChatExchange ModelGateway::complete(const ModelSpec& model, const std::string& prompt,
                                    const SamplingParams& params) {
  if (model.model_id.empty()) throw ConfigError("model_id is empty");
  if (prompt.empty()) throw ConfigError("prompt is empty");

  if (model.kind == ModelKind::scripted) {
    const auto it = scripted_.find(model.model_id);
    if (it == scripted_.end()) {
      throw ConfigError("no scripted behavior registered for " + model.model_id);
    }
    ChatExchange e;
    e.request_prompt = prompt;
    e.model_id = model.model_id;
    e.params = params;
    e.response_text = it->second.respond(prompt, params, config_.seed);
    if (e.response_text.empty()) throw EmptyResponse("scripted model returned no text");
    return e;
  }

  const std::string key = cache_key(model.model_id, prompt, params);
  if (auto hit = cache_load(key)) {
    cache_hits_.fetch_add(1);
    return *hit;
  }
  ChatExchange e = remote_complete(model, prompt, params);
  cache_store(key, e);
  return e;
}

ChatExchange ModelGateway::remote_complete(const ModelSpec& model, const std::string& prompt,
                                           const SamplingParams& params) {
  const json body = {{"model", model.model_id},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", params.temperature},
                     {"max_tokens", params.max_tokens}};
  int retries = 0;
  const auto start = std::chrono::steady_clock::now();
  const std::string raw = post_json("/chat/completions", body.dump(), &retries);
  const auto elapsed = std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - start);

  json parsed = json::parse(raw, nullptr, false);
  if (parsed.is_discarded()) throw ProviderError("provider returned invalid JSON");
  std::string text;
  try {
    text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError("provider response missing choices[0].message.content");
  }
  if (text.empty()) throw EmptyResponse("provider returned empty content");

  ChatExchange e;
  e.request_prompt = prompt;
  e.response_text = text;
  e.model_id = model.model_id;
  e.params = params;
  e.latency_ms = elapsed.count();
  e.retries = retries;
  return e;
}

std::string ModelGateway::post_json(const std::string& path, const std::string& body,
                                    int* retries_out) {
  if (config_.base_url.empty()) {
    throw ConfigError("gateway base url is not configured (set GATEWAY_BASE_URL)");
  }
  const ParsedBaseUrl url = parse_base_url(config_.base_url);

  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
  client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
  client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  double backoff_ms = config_.backoff_initial_ms;
  std::string last_error = "no attempt made";
  const int attempts = std::max(1, config_.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff_ms));
      backoff_ms = std::min(backoff_ms * 2.0, config_.backoff_max_ms);
    }
    limiter_->acquire();
    remote_calls_.fetch_add(1);
    auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
    limiter_->release();
    if (retries_out) *retries_out = attempt;

    if (!res) {
      last_error = "network failure: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 429) {
      last_error = "rate limited (429)";
      if (const auto it = res->headers.find("Retry-After"); it != res->headers.end()) {
        const double after_s = std::atof(it->second.c_str());
        if (after_s > 0) backoff_ms = std::min(after_s * 1000.0, config_.backoff_max_ms);
      }
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error (" + std::to_string(res->status) + ")";
      continue;
    }
    if (res->status != 200) {
      throw ProviderError("provider returned status " + std::to_string(res->status) + ": " +
                          res->body);
    }
    if (res->body.empty()) {
      last_error = "empty response body";
      continue;
    }
    return res->body;
  }

  if (last_error.rfind("rate limited", 0) == 0) throw RateLimited(last_error + " after retry budget");
  if (last_error.rfind("empty response", 0) == 0) throw EmptyResponse(last_error + " after retry budget");
  throw NetworkError(last_error + " after retry budget");
}

std::vector<SampleOutcome> ModelGateway::sample_n(const ModelSpec& model,
                                                  const std::string& prompt,
                                                  const SamplingParams& params, int n) {
  if (n < 1) throw ConfigError("sample_n: n must be >= 1");
  std::vector<SampleOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SamplingParams per_sample = params;
    per_sample.sample_index = i;
    SampleOutcome outcome;
    try {
      outcome.exchange = complete(model, prompt, per_sample);
    } catch (const Error& err) {
      outcome.error = err.what();
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

std::vector<EmbeddingVector> ModelGateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ConfigError("embed: texts must be non-empty");

  if (embedder_) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      out.push_back(EmbeddingVector{embedder_(t), "scripted-embedder"});
    }
    return out;
  }

  const json body = {{"model", config_.embedding_model}, {"input", texts}};
  int retries = 0;
  const std::string raw = post_json("/embeddings", body.dump(), &retries);
  json parsed = json::parse(raw, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array() ||
      parsed["data"].size() != texts.size()) {
    throw ProviderError("embedding response malformed");
  }

  std::vector<EmbeddingVector> out(texts.size());
  Eigen::Index dim = -1;
  for (const auto& item : parsed["data"]) {
    const std::size_t index = item.value("index", out.size());
    if (index >= out.size()) throw ProviderError("embedding response index out of range");
    const auto& values = item.at("embedding");
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = values[static_cast<std::size_t>(i)];
    if (dim < 0) dim = v.size();
    if (v.size() != dim) throw DimensionMismatch("embedding provider returned ragged output");
    out[index] = EmbeddingVector{std::move(v), config_.embedding_model};
  }
  return out;
}

}  // namespace introspect::gateway
