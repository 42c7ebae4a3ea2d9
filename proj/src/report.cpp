#include "introspect/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace introspect::report {

using metrics::ScoreMatrix;
using nlohmann::json;
using tasks::TaskKind;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string to_string_report_name(ReportKind kind);

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string sig(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string csv_cell(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (const char c : value) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += "\"";
  return quoted;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ConfigError("cannot write report file: " + path.string());
  out << content;
}

// Table-2 column for each task kind; prompt reconstruction is reported via
// cosine summaries, not the benchmark table.
std::optional<std::string> benchmark_column(TaskKind kind) {
  switch (kind) {
    case TaskKind::kth_word: return "Kth Word";
    case TaskKind::dilemma_calibration: return "CoT Pred";
    case TaskKind::paraphrase_recognition: return "Paraphrase";
    case TaskKind::heads_up: return "Headsup";
    default: return std::nullopt;
  }
}

std::string diversity_task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kth_word: return "K-th Word Prediction";
    case TaskKind::dilemma_calibration: return "Ethical Dilemma Calibration";
    case TaskKind::heads_up: return "Heads Up Clues";
    case TaskKind::prompt_reconstruction: return "Prompt Reconstruction";
    case TaskKind::paraphrase_recognition: return "Paraphrase Recognition";
  }
  return tasks::to_string(kind);
}

struct MeanAccumulator {
  double sum = 0.0;
  int count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return count == 0 ? kNaN : sum / count; }
};

std::vector<std::filesystem::path> emit_benchmark_table(const store::RunStore& run_store,
                                                        const std::filesystem::path& out_dir,
                                                        bool allow_partial) {
  const auto results = run_store.load_results();
  static const std::vector<TaskKind> kColumns = {TaskKind::kth_word, TaskKind::dilemma_calibration,
                                                 TaskKind::paraphrase_recognition,
                                                 TaskKind::heads_up};

  // Self-configuration rows: observer == target.
  std::map<std::string, std::map<TaskKind, MeanAccumulator>> per_model;
  for (const auto& result : results) {
    if (result.observer_id != result.target_id) continue;
    if (!benchmark_column(result.instance.kind)) continue;
    per_model[result.observer_id][result.instance.kind].add(result.score);
  }
  if (per_model.empty() && !allow_partial) {
    throw IncompleteRun("benchmark_table: store holds no self-configuration results");
  }

  struct Row {
    std::string model;
    std::map<TaskKind, double> percents;
    double average = 0.0;
  };
  std::vector<Row> rows;
  for (const auto& [model, by_kind] : per_model) {
    Row row;
    row.model = model;
    double sum = 0.0;
    int count = 0;
    for (const TaskKind kind : kColumns) {
      const auto it = by_kind.find(kind);
      if (it == by_kind.end() || it->second.count == 0) continue;
      const double pct = it->second.mean() * 100.0;
      row.percents[kind] = pct;
      sum += pct;
      ++count;
    }
    row.average = count == 0 ? 0.0 : sum / count;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.average != b.average) return a.average > b.average;
    return a.model < b.model;
  });

  std::ostringstream csv;
  csv << "Model,Kth Word,CoT Pred,Paraphrase,Headsup,Avg\n";
  for (const auto& row : rows) {
    csv << csv_cell(row.model);
    for (const TaskKind kind : kColumns) {
      csv << ",";
      const auto it = row.percents.find(kind);
      if (it != row.percents.end()) csv << fixed(it->second, 2);
    }
    csv << "," << fixed(row.average, 2) << "\n";
  }

  const auto path = out_dir / "benchmark_table.csv";
  write_file(path, csv.str());
  return {path};
}

std::map<TaskKind, ScoreMatrix> matrices_from_store(const store::RunStore& run_store) {
  const auto results = run_store.load_results();
  std::set<std::string> model_set;
  std::map<TaskKind, std::map<std::pair<std::string, std::string>, MeanAccumulator>> cells;
  for (const auto& result : results) {
    if (!benchmark_column(result.instance.kind)) continue;
    model_set.insert(result.observer_id);
    model_set.insert(result.target_id);
    cells[result.instance.kind][{result.target_id, result.observer_id}].add(result.score);
  }
  const std::vector<std::string> ids(model_set.begin(), model_set.end());
  const auto n = static_cast<Eigen::Index>(ids.size());

  std::map<TaskKind, ScoreMatrix> matrices;
  for (const auto& [kind, kind_cells] : cells) {
    ScoreMatrix matrix{ids, ids, Eigen::MatrixXd::Constant(n, n, kNaN)};
    for (const auto& [key, acc] : kind_cells) {
      matrix.values(matrix.row_index(key.first), matrix.col_index(key.second)) = acc.mean();
    }
    matrices.emplace(kind, std::move(matrix));
  }
  return matrices;
}

std::vector<std::filesystem::path> emit_cross_matrix(const store::RunStore& run_store,
                                                     const std::filesystem::path& out_dir,
                                                     bool allow_partial) {
  const auto matrices = matrices_from_store(run_store);
  if (matrices.empty()) {
    if (allow_partial) return {};
    throw IncompleteRun("cross_matrix: store holds no matrix-task results");
  }

  std::vector<std::filesystem::path> files;
  std::vector<const ScoreMatrix*> parts;
  for (const auto& [kind, matrix] : matrices) {
    parts.push_back(&matrix);
    const auto path_a = out_dir / ("cross_A_" + tasks::to_string(kind) + ".csv");
    write_file(path_a, matrix_to_csv(matrix));
    files.push_back(path_a);
  }
  const ScoreMatrix aggregate = cross_model::aggregate_matrices(parts);
  const bool complete = aggregate.values.allFinite();
  if (!complete && !allow_partial) {
    throw IncompleteRun("cross_matrix: matrix has missing cells; pass --allow-partial");
  }

  const auto path_agg = out_dir / "cross_A.csv";
  write_file(path_agg, matrix_to_csv(aggregate));
  files.push_back(path_agg);

  if (complete) {
    ScoreMatrix log_matrix = aggregate;
    log_matrix.values =
        (aggregate.values.array() + metrics::kDefaultCenteringEpsilon).log().matrix();
    const auto path_l = out_dir / "cross_L.csv";
    write_file(path_l, matrix_to_csv(log_matrix));
    files.push_back(path_l);

    const ScoreMatrix centered = cross_model::normalized_interaction(aggregate);
    const auto path_c = out_dir / "cross_C.csv";
    write_file(path_c, matrix_to_csv(centered));
    files.push_back(path_c);

    const auto path_heat = out_dir / "cross_heatmap.svg";
    write_file(path_heat, render_heatmap_svg(centered, "Interaction matrix C"));
    files.push_back(path_heat);

    // Per-kind centered matrices for appendix-style figures.
    for (const auto& [kind, matrix] : matrices) {
      if (!matrix.values.allFinite()) continue;
      const auto path_kc = out_dir / ("cross_C_" + tasks::to_string(kind) + ".csv");
      write_file(path_kc, matrix_to_csv(cross_model::normalized_interaction(matrix)));
      files.push_back(path_kc);
    }

    const auto report = cross_model::self_advantage(aggregate);
    json report_json;
    json per_model = json::object();
    std::vector<std::string> labels;
    std::vector<double> self_scores;
    std::vector<double> best_other;
    for (const auto& [model, entry] : report.per_model) {
      per_model[model] = {{"self_score", entry.self_score},
                          {"best_other_score", entry.best_other_score},
                          {"mean_other_score", entry.mean_other_score},
                          {"self_advantaged", entry.self_advantaged}};
      labels.push_back(model);
      self_scores.push_back(entry.self_score);
      best_other.push_back(entry.best_other_score);
    }
    report_json["per_model"] = per_model;
    if (report.test) {
      report_json["test"] = {{"t_statistic", report.test->t_statistic},
                             {"degrees_of_freedom", report.test->degrees_of_freedom},
                             {"p_value", report.test->p_value},
                             {"mean_difference", report.test->mean_difference}};
    } else {
      report_json["test_error"] = report.test_error;
    }
    const auto path_adv = out_dir / "cross_self_advantage.json";
    write_file(path_adv, report_json.dump(2) + "\n");
    files.push_back(path_adv);

    const auto path_bars = out_dir / "cross_self_vs_best.svg";
    write_file(path_bars, render_grouped_bars_svg("Self vs best other observer", labels, "self",
                                                  self_scores, "best other", best_other));
    files.push_back(path_bars);
  }
  return files;
}

std::vector<std::filesystem::path> emit_diversity_table(const store::RunStore& run_store,
                                                        const std::filesystem::path& out_dir,
                                                        bool allow_partial) {
  const auto records = run_store.load_diversity();
  if (records.empty() && !allow_partial) {
    throw IncompleteRun("diversity_table: store holds no diversity records");
  }

  std::map<TaskKind, std::vector<cross_model::InstanceResponses>> by_kind;
  std::map<TaskKind, int> excluded;
  for (const auto& record : records) {
    if (record.failed) {
      ++excluded[record.kind];
      continue;
    }
    cross_model::InstanceResponses vectors;
    for (const auto& values : record.embeddings) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = values[static_cast<std::size_t>(i)];
      vectors.push_back(std::move(v));
    }
    by_kind[record.kind].push_back(std::move(vectors));
  }

  static const std::vector<TaskKind> kOrder = {
      TaskKind::kth_word, TaskKind::dilemma_calibration, TaskKind::heads_up,
      TaskKind::prompt_reconstruction, TaskKind::paraphrase_recognition};

  std::ostringstream csv;
  csv << "Task,Closest Agreement (Avg.),Variance (Avg.),Size\n";
  for (const TaskKind kind : kOrder) {
    const auto it = by_kind.find(kind);
    if (it == by_kind.end()) continue;
    const auto row = cross_model::diversity_row(kind, it->second, excluded[kind]);
    csv << csv_cell(diversity_task_name(kind)) << "," << fixed(row.closest_agreement_avg, 4)
        << "," << fixed(row.variance_avg, 4) << "," << row.sample_size << "\n";
  }

  const auto path = out_dir / "diversity_table.csv";
  write_file(path, csv.str());
  return {path};
}

std::vector<std::filesystem::path> emit_kl_summary(const store::RunStore& run_store,
                                                   const std::filesystem::path& out_dir,
                                                   bool allow_partial) {
  const auto results = run_store.load_results();
  std::map<std::string, std::pair<MeanAccumulator, MeanAccumulator>> per_model;  // intro, gut
  for (const auto& result : results) {
    if (result.instance.kind != TaskKind::dilemma_calibration) continue;
    if (result.observer_id != result.target_id) continue;
    if (!result.detail.contains("kl_intro") || !result.detail.contains("kl_gut")) continue;
    auto& [intro, gut] = per_model[result.observer_id];
    intro.add(result.detail.at("kl_intro").get<double>());
    gut.add(result.detail.at("kl_gut").get<double>());
  }
  if (per_model.empty() && !allow_partial) {
    throw IncompleteRun("kl_summary: store holds no dilemma-calibration results");
  }

  std::ostringstream csv;
  csv << "Model,Mean KL Intro,Mean KL Gut,Instances\n";
  std::vector<std::string> labels;
  std::vector<double> intro_means;
  std::vector<double> gut_means;
  for (const auto& [model, accs] : per_model) {
    csv << csv_cell(model) << "," << fixed(accs.first.mean(), 6) << ","
        << fixed(accs.second.mean(), 6) << "," << accs.first.count << "\n";
    labels.push_back(model);
    intro_means.push_back(accs.first.mean());
    gut_means.push_back(accs.second.mean());
  }

  const auto path = out_dir / "kl_summary.csv";
  write_file(path, csv.str());
  std::vector<std::filesystem::path> files = {path};

  if (!labels.empty()) {
    const auto path_svg = out_dir / "kl_summary.svg";
    write_file(path_svg,
               render_grouped_bars_svg("mean KL(p||p') vs mean KL(p||p*)", labels, "KL(p||p')",
                                       intro_means, "KL(p||p*)", gut_means));
    files.push_back(path_svg);
  }
  return files;
}

std::vector<std::filesystem::path> emit_trace_summary(const store::RunStore& run_store,
                                                      const std::filesystem::path& out_dir,
                                                      bool allow_partial) {
  const auto pairs = run_store.load_trace_pairs();
  if (pairs.empty() && !allow_partial) {
    throw IncompleteRun("trace_summary: store holds no trace-pair records");
  }

  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_layer;
  for (const auto& pair : pairs) {
    by_layer[pair.layer_index].first.push_back(pair.intro_mean_entropy);
    by_layer[pair.layer_index].second.push_back(pair.gut_mean_entropy);
  }

  std::ostringstream csv;
  csv << "Layer,Pairs,Mean Entropy Difference,T Statistic,P Value,Aggregation\n";
  for (const auto& [layer, series] : by_layer) {
    const auto& [intro, gut] = series;
    double mean_diff = 0.0;
    for (std::size_t i = 0; i < intro.size(); ++i) mean_diff += intro[i] - gut[i];
    mean_diff /= static_cast<double>(intro.size());
    std::string t_text;
    std::string p_text;
    if (intro.size() >= 2) {
      try {
        const auto test = metrics::paired_t_test(intro, gut);
        t_text = fixed(test.t_statistic, 6);
        p_text = sig(test.p_value);
      } catch (const ZeroVariance&) {
        t_text = "zero_variance";
        p_text = "zero_variance";
      }
    }
    csv << layer << "," << intro.size() << "," << fixed(mean_diff, 6) << "," << t_text << ","
        << p_text << ",mean_over_heads\n";
  }

  const auto path = out_dir / "trace_summary.csv";
  write_file(path, csv.str());
  return {path};
}

std::string to_string_report_name(ReportKind kind) {
  switch (kind) {
    case ReportKind::benchmark_table: return "benchmark_table";
    case ReportKind::cross_matrix: return "cross_matrix";
    case ReportKind::diversity_table: return "diversity_table";
    case ReportKind::kl_summary: return "kl_summary";
    case ReportKind::trace_summary: return "trace_summary";
  }
  throw ConfigError("unknown report kind");
}

}  // namespace

std::string to_string(ReportKind kind) { return to_string_report_name(kind); }

ReportKind report_kind_from_string(const std::string& name) {
  for (const ReportKind kind : all_report_kinds()) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown report kind: " + name);
}

const std::vector<ReportKind>& all_report_kinds() {
  static const std::vector<ReportKind> kinds = {
      ReportKind::benchmark_table, ReportKind::cross_matrix, ReportKind::diversity_table,
      ReportKind::kl_summary, ReportKind::trace_summary};
  return kinds;
}

std::string matrix_to_csv(const ScoreMatrix& matrix) {
  std::ostringstream csv;
  csv << "target\\observer";
  for (const auto& col : matrix.col_labels) csv << "," << csv_cell(col);
  csv << "\n";
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    csv << csv_cell(matrix.row_labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
      csv << "," << sig(matrix.values(r, c));
    }
    csv << "\n";
  }
  return csv.str();
}

std::vector<std::filesystem::path> emit_report(const store::RunStore& run_store, ReportKind kind,
                                               const std::filesystem::path& out_dir,
                                               bool allow_partial) {
  if (!allow_partial) {
    const auto manifest = run_store.read_manifest();
    if (manifest && manifest->status != "complete") {
      throw IncompleteRun("run status is '" + manifest->status + "'; pass --allow-partial");
    }
  }
  switch (kind) {
    case ReportKind::benchmark_table:
      return emit_benchmark_table(run_store, out_dir, allow_partial);
    case ReportKind::cross_matrix: return emit_cross_matrix(run_store, out_dir, allow_partial);
    case ReportKind::diversity_table:
      return emit_diversity_table(run_store, out_dir, allow_partial);
    case ReportKind::kl_summary: return emit_kl_summary(run_store, out_dir, allow_partial);
    case ReportKind::trace_summary: return emit_trace_summary(run_store, out_dir, allow_partial);
  }
  throw ConfigError("unknown report kind");
}

VerifyOutcome verify_reports(const store::RunStore& run_store) {
  VerifyOutcome outcome;
  const auto reports = run_store.reports_dir();
  if (!std::filesystem::is_directory(reports)) {
    outcome.ok = false;
    outcome.mismatches.push_back("(reports directory missing)");
    return outcome;
  }

  const auto temp_dir = run_store.dir() / "reports_verify_tmp";
  std::filesystem::remove_all(temp_dir);
  for (const ReportKind kind : all_report_kinds()) {
    try {
      emit_report(run_store, kind, temp_dir, /*allow_partial=*/true);
    } catch (const Error&) {
      // A kind with no source data simply produces nothing on either side.
    }
  }

  const auto read_all = [](const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  for (const auto& entry : std::filesystem::directory_iterator(reports)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename();
    const auto regenerated = temp_dir / name;
    if (!std::filesystem::exists(regenerated) ||
        read_all(entry.path()) != read_all(regenerated)) {
      outcome.ok = false;
      outcome.mismatches.push_back(name.string());
    }
  }
  std::filesystem::remove_all(temp_dir);
  return outcome;
}

namespace {

struct Rgb {
  int r, g, b;
};

std::string rgb_text(const Rgb& c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  const auto mix = [t](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * t)); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string svg_escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap_svg(const ScoreMatrix& matrix, const std::string& title) {
  matrix.validate();
  const int cell = 48;
  const int margin_left = 140;
  const int margin_top = 60;
  const auto rows = static_cast<int>(matrix.values.rows());
  const auto cols = static_cast<int>(matrix.values.cols());
  const int width = margin_left + cols * cell + 20;
  const int height = margin_top + rows * cell + 20;

  double max_abs = 0.0;
  for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
      if (!std::isnan(matrix.values(r, c))) {
        max_abs = std::max(max_abs, std::fabs(matrix.values(r, c)));
      }
    }
  }
  if (max_abs == 0.0) max_abs = 1.0;

  const Rgb negative{33, 102, 172};
  const Rgb neutral{247, 247, 247};
  const Rgb positive{178, 24, 43};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<text x=\"10\" y=\"24\" font-family=\"monospace\" font-size=\"14\">"
      << svg_escape(title) << "</text>\n";
  for (int c = 0; c < cols; ++c) {
    svg << "<text x=\"" << margin_left + c * cell + cell / 2 << "\" y=\"" << margin_top - 8
        << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">"
        << svg_escape(matrix.col_labels[static_cast<std::size_t>(c)]) << "</text>\n";
  }
  for (int r = 0; r < rows; ++r) {
    svg << "<text x=\"" << margin_left - 6 << "\" y=\"" << margin_top + r * cell + cell / 2 + 4
        << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">"
        << svg_escape(matrix.row_labels[static_cast<std::size_t>(r)]) << "</text>\n";
    for (int c = 0; c < cols; ++c) {
      const double value = matrix.values(r, c);
      Rgb color = neutral;
      std::string label = "";
      if (!std::isnan(value)) {
        const double t = std::clamp(value / max_abs, -1.0, 1.0);
        color = t < 0 ? lerp(neutral, negative, -t) : lerp(neutral, positive, t);
        label = fixed(value, 4);
      }
      svg << "<rect x=\"" << margin_left + c * cell << "\" y=\"" << margin_top + r * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << rgb_text(color)
          << "\" stroke=\"#444444\"/>\n";
      if (!label.empty()) {
        svg << "<text x=\"" << margin_left + c * cell + cell / 2 << "\" y=\""
            << margin_top + r * cell + cell / 2 + 4
            << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"middle\">" << label
            << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_grouped_bars_svg(const std::string& title,
                                    const std::vector<std::string>& group_labels,
                                    const std::string& series_a_name,
                                    const std::vector<double>& series_a,
                                    const std::string& series_b_name,
                                    const std::vector<double>& series_b) {
  if (group_labels.size() != series_a.size() || series_a.size() != series_b.size()) {
    throw LengthMismatch("grouped bars: label/series lengths differ");
  }
  const int bar = 26;
  const int gap = 30;
  const int group_width = 2 * bar + gap;
  const int margin_left = 50;
  const int margin_top = 50;
  const int plot_height = 220;
  const int label_band = 80;
  const int width = margin_left + static_cast<int>(group_labels.size()) * group_width + 40;
  const int height = margin_top + plot_height + label_band;

  double max_value = 0.0;
  for (const double v : series_a) max_value = std::max(max_value, v);
  for (const double v : series_b) max_value = std::max(max_value, v);
  if (max_value <= 0.0) max_value = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<text x=\"10\" y=\"24\" font-family=\"monospace\" font-size=\"14\">"
      << svg_escape(title) << "</text>\n";
  svg << "<text x=\"10\" y=\"40\" font-family=\"monospace\" font-size=\"11\" fill=\"#2c7a2c\">"
      << svg_escape(series_a_name) << "</text>\n";
  svg << "<text x=\"" << width / 2
      << "\" y=\"40\" font-family=\"monospace\" font-size=\"11\" fill=\"#31629c\">"
      << svg_escape(series_b_name) << "</text>\n";

  for (std::size_t i = 0; i < group_labels.size(); ++i) {
    const int x0 = margin_left + static_cast<int>(i) * group_width;
    const auto bar_for = [&](double value, int offset, const char* fill) {
      const int h = static_cast<int>(std::lround(plot_height * value / max_value));
      svg << "<rect x=\"" << x0 + offset << "\" y=\"" << margin_top + plot_height - h
          << "\" width=\"" << bar << "\" height=\"" << h << "\" fill=\"" << fill << "\"/>\n";
      svg << "<text x=\"" << x0 + offset + bar / 2 << "\" y=\""
          << margin_top + plot_height - h - 4
          << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"middle\">"
          << fixed(value, 4) << "</text>\n";
    };
    bar_for(series_a[i], 0, "#2c7a2c");
    bar_for(series_b[i], bar + 2, "#31629c");
    svg << "<text x=\"" << x0 + bar << "\" y=\"" << margin_top + plot_height + 16
        << "\" font-family=\"monospace\" font-size=\"9\" text-anchor=\"middle\""
        << " transform=\"rotate(30 " << x0 + bar << " " << margin_top + plot_height + 16
        << ")\">" << svg_escape(group_labels[i]) << "</text>\n";
  }
  svg << "<line x1=\"" << margin_left - 6 << "\" y1=\"" << margin_top + plot_height
      << "\" x2=\"" << width - 20 << "\" y2=\"" << margin_top + plot_height
      << "\" stroke=\"#444444\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace introspect::report
