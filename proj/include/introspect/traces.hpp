#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "introspect/metrics.hpp"

namespace introspect::traces {

enum class RunLabel { introspection, gut };

std::string to_string(RunLabel label);
RunLabel run_label_from_string(const std::string& name);

struct LayerSlice {
  int layer_index = 0;
  Eigen::VectorXd last_token_vector;  // post final-layernorm
  Eigen::VectorXd unembed_a;
  Eigen::VectorXd unembed_b;
  std::vector<Eigen::VectorXd> attention_rows;  // per head, last token over prior positions
};

struct ActivationTrace {
  RunLabel run_label = RunLabel::introspection;
  std::string dilemma_id;
  std::string token_a;
  std::string token_b;
  std::vector<LayerSlice> layers;  // ordered by depth

  const LayerSlice& layer_at(int layer_index) const;
};

struct AblationRecord {
  std::string dilemma_id;
  double total_logit_shift = 0.0;
  double patched_logit_shift = 0.0;
};

/// dot(v, uA - uB); positive favors option A.
double logit_lens_score(const LayerSlice& slice);

/// First layer index where |score_intro - score_gut| exceeds the gap and
/// stays above it for every deeper layer; nullopt when no such layer exists.
std::optional<int> divergence_layer(const ActivationTrace& intro, const ActivationTrace& gut,
                                    double gap);

/// Per-head attention entropies (nats) at one layer.
std::vector<double> attention_entropy_profile(const ActivationTrace& trace, int layer_index);

struct EntropyGapStats {
  double mean_difference = 0.0;  // mean-over-heads entropy, introspection minus gut
  int pairs = 0;
  std::optional<metrics::PairedTestResult> test;
  std::string test_error;  // e.g. surfaced ZeroVariance
};

EntropyGapStats entropy_gap_stats(const std::vector<ActivationTrace>& intro_traces,
                                  const std::vector<ActivationTrace>& gut_traces,
                                  int layer_index);

double ablation_share(const AblationRecord& record);

nlohmann::ordered_json trace_to_json(const ActivationTrace& trace);
ActivationTrace trace_from_json(const nlohmann::json& j);
ActivationTrace load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const ActivationTrace& trace);
std::vector<ActivationTrace> load_trace_dir(const std::filesystem::path& dir);

std::vector<AblationRecord> load_ablation_records(const std::filesystem::path& path);

}  // namespace introspect::traces
