#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "introspect/orchestrator.hpp"
#include "introspect/report.hpp"

namespace {

using namespace introspect;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitProviderFailure = 3;
constexpr int kExitIncompleteRun = 4;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::string store_dir;
  bool allow_partial = false;
};

orchestrator::RunConfig load_config(const GlobalOptions& opts) {
  orchestrator::RunConfig config;
  if (!opts.config_path.empty()) {
    config = orchestrator::RunConfig::from_json_file(opts.config_path);
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.mock) config.mock = true;
  if (!opts.store_dir.empty()) config.store_dir = opts.store_dir;
  return config;
}

std::vector<cross_model::TaskCount> task_counts_from_config(
    const orchestrator::RunConfig& config) {
  std::vector<cross_model::TaskCount> counts;
  for (const auto& [name, count] : config.task_counts) {
    counts.push_back({tasks::task_kind_from_string(name), count});
  }
  if (counts.empty()) {
    throw ConfigError("config lists no tasks; add a \"tasks\" section");
  }
  return counts;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"introspection benchmark engine"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON run configuration");
  app.add_option("--seed", opts.seed, "override the run seed");
  app.add_flag("--mock", opts.mock, "force the scripted mock roster (no network)");
  app.add_option("--run-dir", opts.store_dir, "run store directory");
  app.add_flag("--allow-partial", opts.allow_partial, "report over incomplete runs");

  // gen-dilemmas
  auto* gen = app.add_subcommand("gen-dilemmas", "instantiate dilemmas over the axis grid");
  std::string generator_id;
  std::string gen_out;
  int gen_limit = 0;
  gen->add_option("--generator", generator_id, "generator model id");
  gen->add_option("--out", gen_out, "output dilemma store (JSONL)")->required();
  gen->add_option("--limit", gen_limit, "only the first N axis combinations (0 = all 750)");

  // filter
  auto* filter = app.add_subcommand("filter", "controversiality-filter a dilemma store");
  std::string filter_in;
  std::string filter_out;
  std::string panel_path;
  std::optional<double> tau_override;
  filter->add_option("--in", filter_in, "input dilemma store")->required();
  filter->add_option("--out", filter_out, "filtered output store")->required();
  filter->add_option("--panel", panel_path, "JSON judge-panel config");
  filter->add_option("--tau", tau_override, "JSD retention threshold (nats)");

  // run
  auto* run = app.add_subcommand("run", "run one task kind for an observer/target pairing");
  std::string task_name;
  std::string observer_id;
  std::string target_id;
  int run_count = 10;
  run->add_option("--task", task_name, "task kind")->required();
  run->add_option("--observer", observer_id, "observer model id");
  run->add_option("--target", target_id, "target model id");
  run->add_option("--count", run_count, "instance count");

  // cross-matrix
  auto* cross = app.add_subcommand("cross-matrix", "run the observer x target matrix");
  std::string plan_path;
  cross->add_option("--plan", plan_path, "JSON plan {\"tasks\": {kind: count}, ...}");

  // diversity-audit
  auto* diversity = app.add_subcommand("diversity-audit", "embed unconstrained responses");
  int diversity_count = 10;
  std::vector<std::string> diversity_tasks;
  diversity->add_option("--count", diversity_count, "instances per task kind");
  diversity->add_option("--tasks", diversity_tasks, "task kinds to audit");

  // analyze-traces
  auto* analyze = app.add_subcommand("analyze-traces", "trace-file entropy and lens analysis");
  std::string intro_dir;
  std::string gut_dir;
  int layer = 0;
  double gap = 0.5;
  std::string ablation_path;
  analyze->add_option("--intro", intro_dir, "introspection-run trace directory")->required();
  analyze->add_option("--gut", gut_dir, "gut-run trace directory")->required();
  analyze->add_option("--layer", layer, "layer index for entropy statistics")->required();
  analyze->add_option("--gap", gap, "divergence-layer score gap");
  analyze->add_option("--ablation", ablation_path, "JSON file of logit-shift records");

  // report / verify-reports
  auto* report_cmd = app.add_subcommand("report", "emit a report from the run store");
  std::string report_kind;
  report_cmd->add_option("--kind", report_kind, "report kind")->required();
  auto* verify = app.add_subcommand("verify-reports", "re-derive reports and byte-compare");

  CLI11_PARSE(app, argc, argv);

  orchestrator::RunConfig config = load_config(opts);

  if (gen->parsed()) {
    orchestrator::Engine engine(config);
    if (generator_id.empty()) generator_id = engine.roster().front().model_id;
    const auto summary = engine.generate_dilemmas(generator_id, gen_out, gen_limit);
    std::printf("generated %d dilemmas (%d already present, %d failed) -> %s\n",
                summary.generated, summary.skipped_existing, summary.failed, gen_out.c_str());
    return kExitOk;
  }

  if (filter->parsed()) {
    if (!panel_path.empty()) {
      std::ifstream in(panel_path);
      if (!in) throw ConfigError("cannot open panel config: " + panel_path);
      const auto pj = nlohmann::json::parse(in);
      if (pj.contains("judges")) config.judge_ids = pj.at("judges").get<std::vector<std::string>>();
      config.samples_per_judge = pj.value("samples_per_judge", config.samples_per_judge);
      config.tau = pj.value("threshold", config.tau);
      config.judge_parse_budget = pj.value("parse_failure_budget", config.judge_parse_budget);
    }
    if (tau_override) config.tau = *tau_override;
    orchestrator::Engine engine(config);
    const auto summary = engine.filter_dilemmas(filter_in, filter_out);
    std::printf("retained %d of %d dilemmas (%d errored, tau %.3f) -> %s\n", summary.retained,
                summary.total, summary.errored, config.tau, filter_out.c_str());
    return summary.errored == summary.total && summary.total > 0 ? kExitProviderFailure : kExitOk;
  }

  if (run->parsed()) {
    orchestrator::Engine engine(config);
    if (observer_id.empty()) observer_id = engine.roster().front().model_id;
    if (target_id.empty()) target_id = observer_id;
    const auto kind = tasks::task_kind_from_string(task_name);
    engine.ensure_manifest({{"task", task_name}, {"count", run_count}});
    const auto results = engine.run_task_batch(kind, observer_id, target_id, run_count);
    engine.mark_complete();
    double mean = 0.0;
    for (const auto& r : results) mean += r.score;
    if (!results.empty()) mean /= static_cast<double>(results.size());
    std::printf("%s: %zu new results, mean score %.4f (store %s)\n", task_name.c_str(),
                results.size(), mean, engine.run_store().dir().string().c_str());
    return kExitOk;
  }

  if (cross->parsed()) {
    if (!plan_path.empty()) {
      std::ifstream in(plan_path);
      if (!in) throw ConfigError("cannot open plan file: " + plan_path);
      const auto pj = nlohmann::json::parse(in);
      if (pj.contains("tasks")) {
        config.task_counts.clear();
        for (const auto& [name, value] : pj.at("tasks").items()) {
          config.task_counts[name] = value.get<int>();
        }
      }
      config.include_self = pj.value("include_self", config.include_self);
      if (pj.contains("seed")) config.seed = pj.at("seed").get<std::uint64_t>();
    }
    orchestrator::Engine engine(config);
    const auto counts = task_counts_from_config(engine.config());
    nlohmann::json plan_json = nlohmann::json::object();
    for (const auto& tc : counts) plan_json[tasks::to_string(tc.kind)] = tc.count;
    engine.ensure_manifest({{"cross_matrix", plan_json}});
    const auto bundle = engine.run_cross_matrix(counts);
    engine.mark_complete();
    std::printf("cross matrix over %zu models and %zu task kinds complete (store %s)\n",
                engine.roster().size(), bundle.per_kind.size(),
                engine.run_store().dir().string().c_str());
    return kExitOk;
  }

  if (diversity->parsed()) {
    orchestrator::Engine engine(config);
    std::vector<tasks::TaskKind> kinds;
    if (diversity_tasks.empty()) {
      kinds = {tasks::TaskKind::kth_word, tasks::TaskKind::dilemma_calibration,
               tasks::TaskKind::heads_up, tasks::TaskKind::prompt_reconstruction};
    } else {
      for (const auto& name : diversity_tasks) kinds.push_back(tasks::task_kind_from_string(name));
    }
    engine.ensure_manifest({{"diversity_count", diversity_count}});
    const auto rows = engine.run_diversity_audit(kinds, diversity_count);
    engine.mark_complete();
    for (const auto& row : rows) {
      std::printf("%-28s closest %.4f variance %.4f size %d (excluded %d)\n",
                  tasks::to_string(row.kind).c_str(), row.closest_agreement_avg, row.variance_avg,
                  row.sample_size, row.excluded);
    }
    return kExitOk;
  }

  if (analyze->parsed()) {
    orchestrator::Engine engine(config);
    engine.ensure_manifest({{"analyze_layer", layer}, {"gap", gap}});
    std::optional<std::filesystem::path> ablation;
    if (!ablation_path.empty()) ablation = ablation_path;
    const auto summary = engine.analyze_traces(intro_dir, gut_dir, layer, gap, ablation);
    engine.mark_complete();
    std::printf("entropy gap at layer %d over %d pairs: mean %.6f", layer, summary.stats.pairs,
                summary.stats.mean_difference);
    if (summary.stats.test) {
      std::printf(" (t %.4f, p %.6g)\n", summary.stats.test->t_statistic,
                  summary.stats.test->p_value);
    } else {
      std::printf(" (%s)\n", summary.stats.test_error.c_str());
    }
    for (const auto& [dilemma_id, share] : summary.ablation_shares) {
      std::printf("ablation share %s: %.4f\n", dilemma_id.c_str(), share);
    }
    return kExitOk;
  }

  if (report_cmd->parsed()) {
    orchestrator::Engine engine(config);
    const auto kind = report::report_kind_from_string(report_kind);
    const auto files = report::emit_report(engine.run_store(), kind,
                                           engine.run_store().reports_dir(), opts.allow_partial);
    for (const auto& file : files) std::printf("wrote %s\n", file.string().c_str());
    return kExitOk;
  }

  if (verify->parsed()) {
    orchestrator::Engine engine(config);
    const auto outcome = report::verify_reports(engine.run_store());
    if (outcome.ok) {
      std::printf("all reports byte-reproducible from the store\n");
      return kExitOk;
    }
    for (const auto& name : outcome.mismatches) {
      std::fprintf(stderr, "report mismatch: %s\n", name.c_str());
    }
    return 1;
  }

  return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfigError;
  } catch (const NetworkError& err) {
    std::fprintf(stderr, "provider failure: %s\n", err.what());
    return kExitProviderFailure;
  } catch (const RateLimited& err) {
    std::fprintf(stderr, "provider failure: %s\n", err.what());
    return kExitProviderFailure;
  } catch (const EmptyResponse& err) {
    std::fprintf(stderr, "provider failure: %s\n", err.what());
    return kExitProviderFailure;
  } catch (const ProviderError& err) {
    std::fprintf(stderr, "provider failure: %s\n", err.what());
    return kExitProviderFailure;
  } catch (const IncompleteRun& err) {
    std::fprintf(stderr, "incomplete run: %s\n", err.what());
    return kExitIncompleteRun;
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "unexpected error: %s\n", err.what());
    return 1;
  }
}
