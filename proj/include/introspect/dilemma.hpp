#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "introspect/gateway.hpp"
#include "introspect/metrics.hpp"
#include "introspect/templates.hpp"

namespace introspect::dilemma {

struct AxisOption {
  std::string name;
  std::string detail;
};

// The four generation axes. Order is frozen so combination indices stay
// stable across runs.
const std::vector<AxisOption>& moral_conflicts();    // 6
const std::vector<AxisOption>& relationships();      // 5
const std::vector<AxisOption>& domain_settings();    // 5
const std::vector<AxisOption>& ambiguity_drivers();  // 5

struct AxisCombination {
  int moral_conflict = 0;
  int relationship = 0;
  int domain_setting = 0;
  int ambiguity_driver = 0;

  const AxisOption& conflict_option() const { return moral_conflicts()[moral_conflict]; }
  const AxisOption& relationship_option() const { return relationships()[relationship]; }
  const AxisOption& domain_option() const { return domain_settings()[domain_setting]; }
  const AxisOption& driver_option() const { return ambiguity_drivers()[ambiguity_driver]; }

  /// Position in the lexicographic enumeration, 0..749.
  int lexicographic_index() const;

  bool operator==(const AxisCombination&) const = default;
};

/// All 6x5x5x5 = 750 combinations in lexicographic order (conflict outermost,
/// ambiguity driver innermost).
std::vector<AxisCombination> enumerate_axes();

struct JudgeSampleSet {
  std::string judge_id;
  std::vector<metrics::ProbabilityDistribution> samples;  // parsed raw samples
  std::vector<std::string> sample_errors;                 // per-sample parse failures
  std::optional<metrics::ProbabilityDistribution> average;
};

struct DilemmaRecord {
  std::string id;
  std::string narrative;
  std::string option_a;
  std::string option_b;
  AxisCombination axes;
  std::vector<JudgeSampleSet> judge_samples;
  std::optional<double> jsd_score;
  bool retained = false;
  bool errored = false;
  std::string error;
  nlohmann::json generation_params;

  /// Narrative plus the explicit binary choice, as shown to judges/solvers.
  std::string dilemma_text() const;

  JudgeSampleSet* find_judge(const std::string& judge_id);
  const JudgeSampleSet* find_judge(const std::string& judge_id) const;
};

struct JudgePanel {
  std::vector<gateway::ModelSpec> judges;
  int samples_per_judge = 5;
  double threshold = 0.2;        // JSD retention threshold, nats
  int parse_failure_budget = 2;  // tolerated unparseable samples per judge

  void validate() const;
};

struct ForgeContext {
  gateway::ModelGateway& gw;
  const tasks::PromptLibrary& prompts;
};

/// Extract the final P(A)/P(B) pair from free-form judge output. Values are
/// clamped to [0,1]; the pair renormalizes when the sum lands in [0.9, 1.1]
/// and fails otherwise.
metrics::ProbabilityDistribution parse_probability_block(const std::string& text);

/// Instantiate one dilemma from an axis combination via the generator model.
DilemmaRecord generate_dilemma(const AxisCombination& combo, const gateway::ModelSpec& generator,
                               ForgeContext& ctx);

/// Sample the judge s times on the record's dilemma, store raw samples plus
/// their arithmetic mean in the record, and return the mean.
metrics::ProbabilityDistribution judge_distribution(DilemmaRecord& record,
                                                    const gateway::ModelSpec& judge, int s,
                                                    ForgeContext& ctx,
                                                    int parse_failure_budget = 2);

/// Multi-judge JSD filter. Sets jsd_score and retained on every record
/// (judging on demand when averages are missing) and returns the retained
/// ones. Judge failures mark the record errored instead of aborting the pass.
std::vector<DilemmaRecord> controversiality_filter(std::vector<DilemmaRecord>& records,
                                                   const JudgePanel& panel, ForgeContext& ctx);

/// Recompute the JSD from the stored raw samples (provenance replay).
double replay_jsd_from_samples(const DilemmaRecord& record);

nlohmann::ordered_json record_to_json(const DilemmaRecord& record);
DilemmaRecord record_from_json(const nlohmann::json& j);

void append_records(const std::filesystem::path& path, const std::vector<DilemmaRecord>& records);
std::vector<DilemmaRecord> load_records(const std::filesystem::path& path);

}  // namespace introspect::dilemma
