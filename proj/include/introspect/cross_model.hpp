#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "introspect/metrics.hpp"
#include "introspect/tasks.hpp"

namespace introspect::cross_model {

struct TaskCount {
  tasks::TaskKind kind = tasks::TaskKind::kth_word;
  int count = 1;
};

struct MatrixRunPlan {
  std::vector<gateway::ModelSpec> models;
  std::vector<TaskCount> task_counts;
  std::uint64_t seed = 0;
  bool include_self = true;

  void validate() const;
};

struct CellStats {
  int completed = 0;
  int failed = 0;
  bool below_completion_floor = false;
};

struct MatrixBundle {
  // Rows are targets, columns observers; NaN marks a cell with no data.
  std::map<tasks::TaskKind, metrics::ScoreMatrix> per_kind;
  metrics::ScoreMatrix aggregate;  // mean of min-max normalized per-kind matrices
  std::map<tasks::TaskKind, std::map<std::string, CellStats>> cell_stats;  // key "target|observer"
};

/// Runs one (kind, target, observer) cell and returns the per-instance
/// scores. Wired by the orchestrator; kept abstract here so matrix assembly
/// is testable with constructed cells.
using CellRunner = std::function<std::vector<double>(
    tasks::TaskKind kind, const gateway::ModelSpec& target, const gateway::ModelSpec& observer,
    int count)>;

inline constexpr double kDefaultCompletionFloor = 0.8;

MatrixBundle build_matrix(const MatrixRunPlan& plan, const CellRunner& run_cell,
                          double completion_floor = kDefaultCompletionFloor);

/// Min-max normalization over the present (non-NaN) cells of a matrix;
/// constant matrices map to all 0.5.
metrics::ScoreMatrix minmax_normalize_matrix(const metrics::ScoreMatrix& matrix);

/// Aggregate = per-cell mean of the min-max normalized per-kind matrices.
metrics::ScoreMatrix aggregate_matrices(
    const std::vector<const metrics::ScoreMatrix*>& matrices);

struct SelfAdvantageEntry {
  double self_score = 0.0;
  double best_other_score = 0.0;
  double mean_other_score = 0.0;
  bool self_advantaged = false;  // self strictly above the best other observer
};

struct SelfAdvantageReport {
  std::map<std::string, SelfAdvantageEntry> per_model;
  std::optional<metrics::PairedTestResult> test;  // self vs best-other across targets
  std::string test_error;                         // e.g. surfaced ZeroVariance
};

SelfAdvantageReport self_advantage(const metrics::ScoreMatrix& matrix);
SelfAdvantageReport self_advantage(const std::vector<metrics::ScoreMatrix>& per_kind);

/// Double-centered log matrix of the aggregate; positive diagonal entries
/// indicate a relative self-introspection advantage.
metrics::ScoreMatrix normalized_interaction(
    const metrics::ScoreMatrix& aggregate,
    double epsilon = metrics::kDefaultCenteringEpsilon);

struct DiversityAuditRow {
  tasks::TaskKind kind = tasks::TaskKind::kth_word;
  double closest_agreement_avg = 0.0;
  double variance_avg = 0.0;
  int sample_size = 0;
  int excluded = 0;
};

/// One audited instance: each model's unconstrained response to the same
/// prompt, embedded for similarity statistics.
using InstanceResponses = std::vector<Eigen::VectorXd>;

DiversityAuditRow diversity_row(tasks::TaskKind kind,
                                const std::vector<InstanceResponses>& instances,
                                int excluded = 0);

}  // namespace introspect::cross_model
