#include "introspect/traces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace introspect::traces {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(RunLabel label) {
  return label == RunLabel::introspection ? "introspection" : "gut";
}

RunLabel run_label_from_string(const std::string& name) {
  if (name == "introspection") return RunLabel::introspection;
  if (name == "gut") return RunLabel::gut;
  throw ConfigError("unknown trace run label: " + name);
}

const LayerSlice& ActivationTrace::layer_at(int layer_index) const {
  for (const auto& slice : layers) {
    if (slice.layer_index == layer_index) return slice;
  }
  throw LayerOutOfRange("trace " + dilemma_id + " has no layer " + std::to_string(layer_index));
}

double logit_lens_score(const LayerSlice& slice) {
  if (slice.last_token_vector.size() != slice.unembed_a.size() ||
      slice.unembed_a.size() != slice.unembed_b.size()) {
    throw DimensionMismatch("logit lens: vector lengths disagree in layer " +
                            std::to_string(slice.layer_index));
  }
  return slice.last_token_vector.dot(slice.unembed_a - slice.unembed_b);
}

std::optional<int> divergence_layer(const ActivationTrace& intro, const ActivationTrace& gut,
                                    double gap) {
  if (intro.dilemma_id != gut.dilemma_id) {
    throw TraceMismatch("divergence_layer: traces belong to different dilemmas");
  }
  if (intro.layers.size() != gut.layers.size()) {
    throw TraceMismatch("divergence_layer: traces have different layer counts");
  }
  const std::size_t n = intro.layers.size();
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (intro.layers[i].layer_index != gut.layers[i].layer_index) {
      throw TraceMismatch("divergence_layer: layer indices disagree at position " +
                          std::to_string(i));
    }
    delta[i] = std::fabs(logit_lens_score(intro.layers[i]) - logit_lens_score(gut.layers[i]));
  }
  // The gap must hold from the candidate layer through every deeper layer.
  std::optional<int> candidate;
  for (std::size_t i = n; i-- > 0;) {
    if (delta[i] > gap) {
      candidate = intro.layers[i].layer_index;
    } else {
      break;
    }
  }
  return candidate;
}

std::vector<double> attention_entropy_profile(const ActivationTrace& trace, int layer_index) {
  const LayerSlice& slice = trace.layer_at(layer_index);
  std::vector<double> entropies;
  entropies.reserve(slice.attention_rows.size());
  for (const auto& row : slice.attention_rows) {
    entropies.push_back(metrics::entropy_nats(row));
  }
  return entropies;
}

EntropyGapStats entropy_gap_stats(const std::vector<ActivationTrace>& intro_traces,
                                  const std::vector<ActivationTrace>& gut_traces,
                                  int layer_index) {
  std::map<std::string, const ActivationTrace*> gut_by_id;
  for (const auto& trace : gut_traces) gut_by_id[trace.dilemma_id] = &trace;
  if (gut_by_id.size() != gut_traces.size()) {
    throw PairingError("entropy_gap_stats: duplicate gut dilemma ids");
  }

  std::vector<double> intro_means;
  std::vector<double> gut_means;
  for (const auto& intro : intro_traces) {
    const auto it = gut_by_id.find(intro.dilemma_id);
    if (it == gut_by_id.end()) {
      throw PairingError("entropy_gap_stats: no gut trace for dilemma " + intro.dilemma_id);
    }
    const auto mean_entropy = [&](const ActivationTrace& trace) {
      const auto entropies = attention_entropy_profile(trace, layer_index);
      if (entropies.empty()) {
        throw LayerOutOfRange("entropy_gap_stats: layer has no attention rows");
      }
      double sum = 0.0;
      for (const double e : entropies) sum += e;
      return sum / static_cast<double>(entropies.size());
    };
    intro_means.push_back(mean_entropy(intro));
    gut_means.push_back(mean_entropy(*it->second));
    gut_by_id.erase(it);
  }
  if (!gut_by_id.empty()) {
    throw PairingError("entropy_gap_stats: unmatched gut traces remain");
  }
  if (intro_means.size() < 2) {
    throw PairingError("entropy_gap_stats: needs at least two paired traces");
  }

  EntropyGapStats stats;
  stats.pairs = static_cast<int>(intro_means.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < intro_means.size(); ++i) sum += intro_means[i] - gut_means[i];
  stats.mean_difference = sum / static_cast<double>(intro_means.size());
  try {
    stats.test = metrics::paired_t_test(intro_means, gut_means);
  } catch (const Error& err) {
    stats.test_error = err.what();
  }
  return stats;
}

double ablation_share(const AblationRecord& record) {
  if (record.total_logit_shift == 0.0) {
    throw ZeroTotalShift("ablation_share: total logit shift is zero for " + record.dilemma_id);
  }
  return record.patched_logit_shift / record.total_logit_shift;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::VectorXd validated_attention_row(const json& arr, const std::string& dilemma_id) {
  Eigen::VectorXd row = vector_from_json(arr);
  if ((row.array() < 0.0).any()) {
    throw NonFinite("trace " + dilemma_id + ": negative attention weight");
  }
  const double sum = row.sum();
  if (std::fabs(sum - 1.0) > 1e-6 || sum <= 0.0) {
    throw NonFinite("trace " + dilemma_id + ": attention row sums to " + std::to_string(sum));
  }
  return row / sum;
}

}  // namespace

ordered_json trace_to_json(const ActivationTrace& trace) {
  ordered_json j;
  j["run_label"] = to_string(trace.run_label);
  j["dilemma_id"] = trace.dilemma_id;
  j["token_A"] = trace.token_a;
  j["token_B"] = trace.token_b;
  ordered_json layers = ordered_json::array();
  for (const auto& slice : trace.layers) {
    ordered_json lj;
    lj["layer_index"] = slice.layer_index;
    lj["v"] = vector_to_json(slice.last_token_vector);
    lj["uA"] = vector_to_json(slice.unembed_a);
    lj["uB"] = vector_to_json(slice.unembed_b);
    ordered_json attn = ordered_json::array();
    for (const auto& row : slice.attention_rows) attn.push_back(vector_to_json(row));
    lj["attn"] = attn;
    layers.push_back(lj);
  }
  j["layers"] = layers;
  return j;
}

ActivationTrace trace_from_json(const json& j) {
  ActivationTrace trace;
  trace.run_label = run_label_from_string(j.at("run_label").get<std::string>());
  trace.dilemma_id = j.at("dilemma_id").get<std::string>();
  trace.token_a = j.at("token_A").get<std::string>();
  trace.token_b = j.at("token_B").get<std::string>();
  int previous_layer = std::numeric_limits<int>::min();
  for (const auto& lj : j.at("layers")) {
    LayerSlice slice;
    slice.layer_index = lj.at("layer_index").get<int>();
    if (slice.layer_index <= previous_layer) {
      throw TraceMismatch("trace " + trace.dilemma_id + ": layers not ordered by depth");
    }
    previous_layer = slice.layer_index;
    slice.last_token_vector = vector_from_json(lj.at("v"));
    slice.unembed_a = vector_from_json(lj.at("uA"));
    slice.unembed_b = vector_from_json(lj.at("uB"));
    if (slice.last_token_vector.size() != slice.unembed_a.size() ||
        slice.unembed_a.size() != slice.unembed_b.size()) {
      throw DimensionMismatch("trace " + trace.dilemma_id + ": vector lengths disagree in layer " +
                              std::to_string(slice.layer_index));
    }
    for (const auto& row : lj.at("attn")) {
      slice.attention_rows.push_back(validated_attention_row(row, trace.dilemma_id));
    }
    trace.layers.push_back(std::move(slice));
  }
  return trace;
}

ActivationTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace file: " + path.string());
  return trace_from_json(json::parse(in));
}

void save_trace(const std::filesystem::path& path, const ActivationTrace& trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << trace_to_json(trace).dump(2) << "\n";
}

std::vector<ActivationTrace> load_trace_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("trace directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ActivationTrace> traces;
  traces.reserve(files.size());
  for (const auto& file : files) traces.push_back(load_trace(file));
  return traces;
}

std::vector<AblationRecord> load_ablation_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open ablation file: " + path.string());
  const json j = json::parse(in);
  if (!j.is_array()) throw ConfigError("ablation file must hold a JSON array");
  std::vector<AblationRecord> records;
  for (const auto& item : j) {
    AblationRecord record;
    record.dilemma_id = item.at("dilemma_id").get<std::string>();
    record.total_logit_shift = item.at("total_logit_shift").get<double>();
    record.patched_logit_shift = item.at("patched_logit_shift").get<double>();
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace introspect::traces
