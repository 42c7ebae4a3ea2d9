#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "introspect/errors.hpp"

namespace introspect::gateway {

struct SamplingParams {
  double temperature = 0.0;  // 0 requests deterministic decoding
  int max_tokens = 1024;
  int sample_index = 0;  // distinguishes repeated draws at identical settings
};

enum class ModelKind { remote, scripted };

struct ModelSpec {
  std::string model_id;
  ModelKind kind = ModelKind::scripted;
  SamplingParams default_params;
};

struct ChatExchange {
  std::string request_prompt;
  std::string response_text;  // verbatim provider output
  std::string model_id;
  SamplingParams params;
  double latency_ms = 0.0;
  bool cached = false;
  int retries = 0;
};

struct EmbeddingVector {
  Eigen::VectorXd values;
  std::string source_model;
};

/// Deterministic mock model: an ordered list of prompt-matching rules, each
/// paired with a responder that is a pure function of (prompt, params, seed).
class ScriptedModel {
 public:
  using Matcher = std::function<bool(const std::string& prompt)>;
  using Responder =
      std::function<std::string(const std::string& prompt, const SamplingParams& params,
                                std::uint64_t seed)>;

  ScriptedModel& add_rule(Matcher matches, Responder respond);
  ScriptedModel& on_substring(const std::string& needle, Responder respond);
  ScriptedModel& fallback(Responder respond);
  ScriptedModel& fallback_text(std::string text);

  std::string respond(const std::string& prompt, const SamplingParams& params,
                      std::uint64_t seed) const;

 private:
  struct Rule {
    Matcher matches;
    Responder respond;
  };
  std::vector<Rule> rules_;
  Responder fallback_;
};

using ScriptedEmbedder = std::function<Eigen::VectorXd(const std::string& text)>;

/// Unit vector drawn from a text-keyed RNG; identical texts map to identical
/// vectors, distinct texts to near-orthogonal ones.
ScriptedEmbedder hashing_embedder(int dim = 64, std::uint64_t seed = 0);

/// One-hot vector at a text-keyed index; collisions aside, distinct texts are
/// exactly orthogonal.
ScriptedEmbedder orthogonal_embedder(int dim = 4096);

struct GatewayConfig {
  std::string base_url;  // e.g. https://host/v1; GATEWAY_BASE_URL overrides
  std::string api_key;   // only ever sourced from GATEWAY_API_KEY
  std::string embedding_model = "text-embedding-3-small";
  int max_attempts = 4;
  double backoff_initial_ms = 250.0;
  double backoff_max_ms = 8000.0;
  double timeout_seconds = 120.0;
  int max_in_flight = 4;  // per-provider bound
  bool caching = true;
  std::filesystem::path cache_dir;  // empty disables the on-disk cache
  std::uint64_t seed = 0;           // feeds scripted responders

  /// Apply GATEWAY_API_KEY / GATEWAY_BASE_URL from the environment.
  void apply_env();
};

struct SampleOutcome {
  std::optional<ChatExchange> exchange;
  std::string error;  // empty on success

  bool ok() const { return exchange.has_value(); }
};

/// Uniform access to chat-completion and embedding providers. Safe for
/// concurrent use; the response cache is internally synchronized and remote
/// requests pass through a per-provider in-flight bound.
class ModelGateway {
 public:
  explicit ModelGateway(GatewayConfig config = {});

  void register_scripted(const std::string& model_id, ScriptedModel model);
  void set_embedder(ScriptedEmbedder embedder);

  ChatExchange complete(const ModelSpec& model, const std::string& prompt,
                        const SamplingParams& params);
  ChatExchange complete(const ModelSpec& model, const std::string& prompt);

  /// n exchanges with sample_index 0..n-1. Per-sample failures are returned
  /// as error markers instead of aborting the batch.
  std::vector<SampleOutcome> sample_n(const ModelSpec& model, const std::string& prompt,
                                      const SamplingParams& params, int n);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

  const GatewayConfig& config() const { return config_; }
  std::uint64_t remote_calls() const { return remote_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

 private:
  class InFlightLimiter {
   public:
    explicit InFlightLimiter(int limit) : limit_(limit) {}
    void acquire();
    void release();

   private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
  };

  std::string cache_key(const std::string& model_id, const std::string& prompt,
                        const SamplingParams& params) const;
  std::optional<ChatExchange> cache_load(const std::string& key) const;
  void cache_store(const std::string& key, const ChatExchange& exchange) const;
  ChatExchange remote_complete(const ModelSpec& model, const std::string& prompt,
                               const SamplingParams& params);
  std::string post_json(const std::string& path, const std::string& body, int* retries_out);

  GatewayConfig config_;
  std::map<std::string, ScriptedModel> scripted_;
  ScriptedEmbedder embedder_;
  mutable std::mutex cache_mutex_;
  std::unique_ptr<InFlightLimiter> limiter_;
  std::atomic<std::uint64_t> remote_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace introspect::gateway
