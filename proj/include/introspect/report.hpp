#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "introspect/cross_model.hpp"
#include "introspect/metrics.hpp"
#include "introspect/store.hpp"

namespace introspect::report {

enum class ReportKind {
  benchmark_table,
  cross_matrix,
  diversity_table,
  kl_summary,
  trace_summary,
};

std::string to_string(ReportKind kind);
ReportKind report_kind_from_string(const std::string& name);
const std::vector<ReportKind>& all_report_kinds();

/// Emit one report kind into out_dir; every number is derived from the store
/// alone. Returns the written files.
std::vector<std::filesystem::path> emit_report(const store::RunStore& run_store, ReportKind kind,
                                               const std::filesystem::path& out_dir,
                                               bool allow_partial = false);

struct VerifyOutcome {
  bool ok = true;
  std::vector<std::string> mismatches;  // file names that failed byte comparison
};

/// Re-derive every report present under the store's reports/ directory and
/// byte-compare against what is on disk.
VerifyOutcome verify_reports(const store::RunStore& run_store);

// Deterministic SVG renderers (no plotting dependency, byte-stable output).
std::string render_heatmap_svg(const metrics::ScoreMatrix& matrix, const std::string& title);
std::string render_grouped_bars_svg(const std::string& title,
                                    const std::vector<std::string>& group_labels,
                                    const std::string& series_a_name,
                                    const std::vector<double>& series_a,
                                    const std::string& series_b_name,
                                    const std::vector<double>& series_b);

std::string matrix_to_csv(const metrics::ScoreMatrix& matrix);

}  // namespace introspect::report
