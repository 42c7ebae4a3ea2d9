#include "introspect/cross_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace introspect::cross_model {

using metrics::ScoreMatrix;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> model_ids(const std::vector<gateway::ModelSpec>& models) {
  std::vector<std::string> ids;
  ids.reserve(models.size());
  for (const auto& m : models) ids.push_back(m.model_id);
  return ids;
}

}  // namespace

void MatrixRunPlan::validate() const {
  if (models.size() < 2) throw ConfigError("matrix plan needs at least two models");
  if (task_counts.empty()) throw ConfigError("matrix plan needs at least one task kind");
  for (const auto& tc : task_counts) {
    if (tc.count < 1) throw ConfigError("matrix plan instance counts must be >= 1");
  }
  std::vector<std::string> ids = model_ids(models);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("matrix plan has duplicate model ids");
  }
}

MatrixBundle build_matrix(const MatrixRunPlan& plan, const CellRunner& run_cell,
                          double completion_floor) {
  plan.validate();
  const auto ids = model_ids(plan.models);
  const auto n = static_cast<Eigen::Index>(ids.size());

  MatrixBundle bundle;
  for (const auto& tc : plan.task_counts) {
    ScoreMatrix matrix{ids, ids, Eigen::MatrixXd::Constant(n, n, kNaN)};
    auto& stats = bundle.cell_stats[tc.kind];
    for (Eigen::Index t = 0; t < n; ++t) {
      for (Eigen::Index o = 0; o < n; ++o) {
        if (!plan.include_self && t == o) continue;
        const auto& target = plan.models[static_cast<std::size_t>(t)];
        const auto& observer = plan.models[static_cast<std::size_t>(o)];
        const std::vector<double> scores = run_cell(tc.kind, target, observer, tc.count);
        CellStats cell;
        cell.completed = static_cast<int>(scores.size());
        cell.failed = tc.count - cell.completed;
        cell.below_completion_floor =
            static_cast<double>(cell.completed) < completion_floor * tc.count;
        if (!scores.empty()) {
          double sum = 0.0;
          for (const double s : scores) sum += s;
          matrix.values(t, o) = sum / static_cast<double>(scores.size());
        }
        stats[target.model_id + "|" + observer.model_id] = cell;
      }
    }
    bundle.per_kind.emplace(tc.kind, std::move(matrix));
  }

  std::vector<const ScoreMatrix*> parts;
  parts.reserve(bundle.per_kind.size());
  for (const auto& [kind, matrix] : bundle.per_kind) parts.push_back(&matrix);
  bundle.aggregate = aggregate_matrices(parts);
  return bundle;
}

ScoreMatrix minmax_normalize_matrix(const ScoreMatrix& matrix) {
  matrix.validate();
  std::vector<double> present;
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
      if (!std::isnan(matrix.values(r, c))) present.push_back(matrix.values(r, c));
    }
  }
  if (present.empty()) throw EmptyColumn("minmax_normalize_matrix: no present cells");
  const auto [lo_it, hi_it] = std::minmax_element(present.begin(), present.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  ScoreMatrix out = matrix;
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
      if (std::isnan(out.values(r, c))) continue;
      out.values(r, c) = hi == lo ? 0.5 : (out.values(r, c) - lo) / (hi - lo);
    }
  }
  return out;
}

ScoreMatrix aggregate_matrices(const std::vector<const ScoreMatrix*>& matrices) {
  if (matrices.empty()) throw EmptyColumn("aggregate_matrices: no matrices");
  const ScoreMatrix& first = *matrices.front();
  for (const auto* m : matrices) {
    if (m->row_labels != first.row_labels || m->col_labels != first.col_labels) {
      throw LabelMismatch("aggregate_matrices: matrices have different labels");
    }
  }

  ScoreMatrix out{first.row_labels, first.col_labels,
                  Eigen::MatrixXd::Zero(first.values.rows(), first.values.cols())};
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(first.values.rows(), first.values.cols());
  for (const auto* m : matrices) {
    const ScoreMatrix normalized = minmax_normalize_matrix(*m);
    for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
      for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        if (std::isnan(normalized.values(r, c))) continue;
        out.values(r, c) += normalized.values(r, c);
        counts(r, c) += 1.0;
      }
    }
  }
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
      out.values(r, c) = counts(r, c) > 0.0 ? out.values(r, c) / counts(r, c) : kNaN;
    }
  }
  return out;
}

SelfAdvantageReport self_advantage(const ScoreMatrix& matrix) {
  matrix.validate();
  if (matrix.row_labels != matrix.col_labels) {
    throw LabelMismatch("self_advantage: matrix must be square with identical labels");
  }
  const auto n = matrix.values.rows();

  SelfAdvantageReport report;
  std::vector<double> self_scores;
  std::vector<double> best_other_scores;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double self = matrix.values(t, t);
    if (std::isnan(self)) {
      throw MissingDiagonal("self_advantage: missing diagonal entry for " +
                            matrix.row_labels[static_cast<std::size_t>(t)]);
    }
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index o = 0; o < n; ++o) {
      if (o == t || std::isnan(matrix.values(t, o))) continue;
      best = std::max(best, matrix.values(t, o));
      sum += matrix.values(t, o);
      ++count;
    }
    if (count == 0) {
      throw MissingDiagonal("self_advantage: no off-diagonal observers for " +
                            matrix.row_labels[static_cast<std::size_t>(t)]);
    }
    SelfAdvantageEntry entry;
    entry.self_score = self;
    entry.best_other_score = best;
    entry.mean_other_score = sum / count;
    entry.self_advantaged = self > best;
    report.per_model[matrix.row_labels[static_cast<std::size_t>(t)]] = entry;
    self_scores.push_back(self);
    best_other_scores.push_back(best);
  }

  try {
    report.test = metrics::paired_t_test(self_scores, best_other_scores);
  } catch (const Error& err) {
    report.test_error = err.what();
  }
  return report;
}

SelfAdvantageReport self_advantage(const std::vector<ScoreMatrix>& per_kind) {
  std::vector<const ScoreMatrix*> parts;
  parts.reserve(per_kind.size());
  for (const auto& m : per_kind) parts.push_back(&m);
  return self_advantage(aggregate_matrices(parts));
}

ScoreMatrix normalized_interaction(const ScoreMatrix& aggregate, double epsilon) {
  return metrics::double_center_log(aggregate, epsilon);
}

DiversityAuditRow diversity_row(tasks::TaskKind kind,
                                const std::vector<InstanceResponses>& instances,
                                int excluded) {
  DiversityAuditRow row;
  row.kind = kind;
  row.excluded = excluded;
  if (instances.empty()) return row;

  double closest_sum = 0.0;
  double variance_sum = 0.0;
  for (const auto& vectors : instances) {
    const auto closest = metrics::closest_pair_similarity(vectors);
    closest_sum += closest.max_similarity;

    std::vector<double> sims;
    for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
      for (std::size_t j = i + 1; j < vectors.size(); ++j) {
        sims.push_back(metrics::cosine_similarity(vectors[i], vectors[j]));
      }
    }
    double mean = 0.0;
    for (const double s : sims) mean += s;
    mean /= static_cast<double>(sims.size());
    double variance = 0.0;
    for (const double s : sims) variance += (s - mean) * (s - mean);
    variance_sum += variance / static_cast<double>(sims.size());
  }
  row.sample_size = static_cast<int>(instances.size());
  row.closest_agreement_avg = closest_sum / static_cast<double>(instances.size());
  row.variance_avg = variance_sum / static_cast<double>(instances.size());
  return row;
}

}  // namespace introspect::cross_model
