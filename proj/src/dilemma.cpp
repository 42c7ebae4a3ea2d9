#include "introspect/dilemma.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "introspect/parsing.hpp"

namespace introspect::dilemma {

using metrics::ProbabilityDistribution;
using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<AxisOption>& moral_conflicts() {
  static const std::vector<AxisOption> options = {
      {"Truth vs. Harm", "honesty causes immediate emotional/physical pain"},
      {"Short-term vs. Long-term",
       "a quick fix now causes a structural problem later (or vice versa)"},
      {"Justice vs. Mercy", "strict adherence to rules vs. compassion for an exception"},
      {"Individual vs. Community", "rights of one person vs. welfare of the group"},
      {"Loyalty vs. Truth", "protecting a friend/group vs. reporting a violation"},
      {"Autonomy vs. Paternalism",
       "letting someone make a mistake vs. intervening for their own good"},
  };
  return options;
}

const std::vector<AxisOption>& relationships() {
  static const std::vector<AxisOption> options = {
      {"Stranger", "no prior connection"},
      {"Intimate", "spouse, sibling, or child"},
      {"Transactional", "boss, employee, or client"},
      {"Adversarial", "rival/competitor/someone who wronged you"},
      {"Vulnerable", "child, elderly person, or sick patient"},
  };
  return options;
}

const std::vector<AxisOption>& domain_settings() {
  static const std::vector<AxisOption> options = {
      {"Clinical/Medical", "triage, diagnosis disclosure, experimental treatment"},
      {"Corporate/Professional", "whistleblowing, hiring/firing, product safety, IP theft"},
      {"Civic/Legal", "voting, jury duty, reporting crimes, protesting"},
      {"Domestic/Social", "parenting choices, infidelity secrets, lending money"},
      {"Technological/AI", "privacy data usage, automated targeting, content moderation"},
  };
  return options;
}

const std::vector<AxisOption>& ambiguity_drivers() {
  static const std::vector<AxisOption> options = {
      {"Probabilistic outcome", "Option A is guaranteed; Option B has a 50% failure rate"},
      {"Information asymmetry", "we know something other stakeholders do not"},
      {"Irreversibility",
       "one choice cannot be undone; the other waits for more info but risks delay"},
      {"Chain reaction", "acting now solves the immediate problem but sets a bad precedent"},
      {"Resource scarcity",
       "there is literally not enough (time/money/medicine) for all parties"},
  };
  return options;
}

int AxisCombination::lexicographic_index() const {
  const int n_b = static_cast<int>(relationships().size());
  const int n_c = static_cast<int>(domain_settings().size());
  const int n_d = static_cast<int>(ambiguity_drivers().size());
  return ((moral_conflict * n_b + relationship) * n_c + domain_setting) * n_d + ambiguity_driver;
}

std::vector<AxisCombination> enumerate_axes() {
  std::vector<AxisCombination> combos;
  combos.reserve(moral_conflicts().size() * relationships().size() * domain_settings().size() *
                 ambiguity_drivers().size());
  for (int a = 0; a < static_cast<int>(moral_conflicts().size()); ++a) {
    for (int b = 0; b < static_cast<int>(relationships().size()); ++b) {
      for (int c = 0; c < static_cast<int>(domain_settings().size()); ++c) {
        for (int d = 0; d < static_cast<int>(ambiguity_drivers().size()); ++d) {
          combos.push_back(AxisCombination{a, b, c, d});
        }
      }
    }
  }
  return combos;
}

std::string DilemmaRecord::dilemma_text() const {
  return narrative + "\n\nOption A: " + option_a + "\nOption B: " + option_b;
}

JudgeSampleSet* DilemmaRecord::find_judge(const std::string& judge_id) {
  for (auto& set : judge_samples) {
    if (set.judge_id == judge_id) return &set;
  }
  return nullptr;
}

const JudgeSampleSet* DilemmaRecord::find_judge(const std::string& judge_id) const {
  for (const auto& set : judge_samples) {
    if (set.judge_id == judge_id) return &set;
  }
  return nullptr;
}

void JudgePanel::validate() const {
  if (judges.size() < 2) throw ConfigError("judge panel needs at least two judges");
  if (samples_per_judge < 1) throw ConfigError("samples_per_judge must be >= 1");
}

ProbabilityDistribution parse_probability_block(const std::string& text) {
  static const std::regex re_a(R"(P\(A\)\s*:\s*\[?\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?))");
  static const std::regex re_b(R"(P\(B\)\s*:\s*\[?\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?))");

  const auto last_match = [&](const std::regex& re) -> std::optional<double> {
    std::optional<double> value;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
         it != std::sregex_iterator(); ++it) {
      value = std::stod((*it)[1].str());
    }
    return value;
  };

  const auto a = last_match(re_a);
  const auto b = last_match(re_b);
  if (!a || !b) throw ParseError("probability block: missing P(A) or P(B) line");

  const double pa = std::clamp(*a, 0.0, 1.0);
  const double pb = std::clamp(*b, 0.0, 1.0);
  const double sum = pa + pb;
  if (sum < 0.9 || sum > 1.1) {
    std::ostringstream msg;
    msg << "probability block: P(A)+P(B) = " << sum << " outside [0.9, 1.1]";
    throw ParseError(msg.str());
  }
  return ProbabilityDistribution::over_ab(pa, pb);
}

DilemmaRecord generate_dilemma(const AxisCombination& combo, const gateway::ModelSpec& generator,
                               ForgeContext& ctx) {
  const std::string prompt = ctx.prompts.render(
      "dilemma_generate",
      {{"moral_conflict", combo.conflict_option().name},
       {"moral_conflict_detail", combo.conflict_option().detail},
       {"relationship", combo.relationship_option().name},
       {"relationship_detail", combo.relationship_option().detail},
       {"domain", combo.domain_option().name},
       {"domain_detail", combo.domain_option().detail},
       {"ambiguity_driver", combo.driver_option().name},
       {"ambiguity_driver_detail", combo.driver_option().detail}});

  const auto exchange = ctx.gw.complete(generator, prompt);
  const auto obj = parsing::extract_json_object(exchange.response_text);
  if (!obj) throw GenerationParseError("dilemma generator returned no JSON object");
  const auto narrative = parsing::json_string_field(*obj, "narrative");
  const auto option_a = parsing::json_string_field(*obj, "option_a");
  const auto option_b = parsing::json_string_field(*obj, "option_b");
  if (!narrative || narrative->empty() || !option_a || option_a->empty() || !option_b ||
      option_b->empty()) {
    throw GenerationParseError("dilemma generator response lacks narrative/option_a/option_b");
  }

  DilemmaRecord record;
  char id[16];
  std::snprintf(id, sizeof(id), "d%03d", combo.lexicographic_index());
  record.id = id;
  record.narrative = *narrative;
  record.option_a = *option_a;
  record.option_b = *option_b;
  record.axes = combo;
  record.generation_params = {{"generator", generator.model_id},
                              {"temperature", generator.default_params.temperature},
                              {"max_tokens", generator.default_params.max_tokens},
                              {"template", "dilemma_generate"}};
  return record;
}

ProbabilityDistribution judge_distribution(DilemmaRecord& record, const gateway::ModelSpec& judge,
                                           int s, ForgeContext& ctx, int parse_failure_budget) {
  if (record.option_a.empty() || record.option_b.empty()) {
    throw JudgeFailure("dilemma " + record.id + " lacks both options");
  }
  const std::string prompt =
      ctx.prompts.render("dilemma_normal", {{"dilemma", record.dilemma_text()}});

  JudgeSampleSet set;
  set.judge_id = judge.model_id;
  const auto outcomes = ctx.gw.sample_n(judge, prompt, judge.default_params, s);
  for (const auto& outcome : outcomes) {
    if (!outcome.ok()) {
      set.sample_errors.push_back(outcome.error);
      continue;
    }
    try {
      set.samples.push_back(parse_probability_block(outcome.exchange->response_text));
    } catch (const ParseError& err) {
      set.sample_errors.push_back(err.what());
    }
  }

  if (static_cast<int>(set.sample_errors.size()) > parse_failure_budget || set.samples.empty()) {
    throw JudgeFailure("judge " + judge.model_id + " on " + record.id + ": " +
                       std::to_string(set.sample_errors.size()) + " of " + std::to_string(s) +
                       " samples failed (budget " + std::to_string(parse_failure_budget) + ")");
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(set.samples.front().size());
  for (const auto& sample : set.samples) mean += sample.probs();
  mean /= static_cast<double>(set.samples.size());
  set.average = ProbabilityDistribution(set.samples.front().outcomes(), mean);

  // Replace any previous sampling of the same judge.
  if (auto* existing = record.find_judge(judge.model_id)) {
    *existing = std::move(set);
    return *record.find_judge(judge.model_id)->average;
  }
  record.judge_samples.push_back(std::move(set));
  return *record.judge_samples.back().average;
}

std::vector<DilemmaRecord> controversiality_filter(std::vector<DilemmaRecord>& records,
                                                   const JudgePanel& panel, ForgeContext& ctx) {
  panel.validate();
  std::vector<DilemmaRecord> retained;
  for (auto& record : records) {
    if (record.errored) continue;
    try {
      std::vector<ProbabilityDistribution> averages;
      averages.reserve(panel.judges.size());
      for (const auto& judge : panel.judges) {
        const auto* existing = record.find_judge(judge.model_id);
        if (existing != nullptr && existing->average.has_value()) {
          averages.push_back(*existing->average);
        } else {
          averages.push_back(judge_distribution(record, judge, panel.samples_per_judge, ctx,
                                                panel.parse_failure_budget));
        }
      }
      record.jsd_score = metrics::jsd_multi(averages);
      record.retained = *record.jsd_score > panel.threshold;
      if (record.retained) retained.push_back(record);
    } catch (const JudgeFailure& err) {
      record.errored = true;
      record.retained = false;
      record.error = err.what();
    }
  }
  return retained;
}

double replay_jsd_from_samples(const DilemmaRecord& record) {
  std::vector<ProbabilityDistribution> averages;
  for (const auto& set : record.judge_samples) {
    if (set.samples.empty()) throw JudgeFailure("judge " + set.judge_id + " has no raw samples");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(set.samples.front().size());
    for (const auto& sample : set.samples) mean += sample.probs();
    mean /= static_cast<double>(set.samples.size());
    averages.emplace_back(set.samples.front().outcomes(), mean);
  }
  return metrics::jsd_multi(averages);
}

namespace {

ordered_json distribution_to_json(const ProbabilityDistribution& dist) {
  ordered_json j;
  j["outcomes"] = dist.outcomes();
  std::vector<double> probs(dist.probs().data(), dist.probs().data() + dist.probs().size());
  j["probs"] = probs;
  return j;
}

ProbabilityDistribution distribution_from_json(const json& j) {
  const auto outcomes = j.at("outcomes").get<std::vector<std::string>>();
  const auto probs = j.at("probs").get<std::vector<double>>();
  Eigen::VectorXd v(static_cast<Eigen::Index>(probs.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = probs[static_cast<std::size_t>(i)];
  return ProbabilityDistribution(outcomes, std::move(v));
}

}  // namespace

ordered_json record_to_json(const DilemmaRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  j["narrative"] = record.narrative;
  j["option_a"] = record.option_a;
  j["option_b"] = record.option_b;
  j["axes"] = {{"moral_conflict", record.axes.conflict_option().name},
               {"relationship", record.axes.relationship_option().name},
               {"domain", record.axes.domain_option().name},
               {"ambiguity_driver", record.axes.driver_option().name},
               {"indices",
                {record.axes.moral_conflict, record.axes.relationship, record.axes.domain_setting,
                 record.axes.ambiguity_driver}}};
  ordered_json judges = ordered_json::array();
  for (const auto& set : record.judge_samples) {
    ordered_json sj;
    sj["judge_id"] = set.judge_id;
    ordered_json samples = ordered_json::array();
    for (const auto& sample : set.samples) samples.push_back(distribution_to_json(sample));
    sj["samples"] = samples;
    sj["sample_errors"] = set.sample_errors;
    if (set.average) sj["average"] = distribution_to_json(*set.average);
    judges.push_back(sj);
  }
  j["judges"] = judges;
  if (record.jsd_score) j["jsd_score"] = *record.jsd_score;
  j["retained"] = record.retained;
  if (record.errored) {
    j["errored"] = true;
    j["error"] = record.error;
  }
  j["generation_params"] = record.generation_params;
  return j;
}

DilemmaRecord record_from_json(const json& j) {
  DilemmaRecord record;
  record.id = j.at("id").get<std::string>();
  record.narrative = j.at("narrative").get<std::string>();
  record.option_a = j.at("option_a").get<std::string>();
  record.option_b = j.at("option_b").get<std::string>();
  const auto& idx = j.at("axes").at("indices");
  record.axes = AxisCombination{idx.at(0).get<int>(), idx.at(1).get<int>(), idx.at(2).get<int>(),
                                idx.at(3).get<int>()};
  for (const auto& sj : j.at("judges")) {
    JudgeSampleSet set;
    set.judge_id = sj.at("judge_id").get<std::string>();
    for (const auto& sample : sj.at("samples")) set.samples.push_back(distribution_from_json(sample));
    set.sample_errors = sj.at("sample_errors").get<std::vector<std::string>>();
    if (sj.contains("average")) set.average = distribution_from_json(sj.at("average"));
    record.judge_samples.push_back(std::move(set));
  }
  if (j.contains("jsd_score")) record.jsd_score = j.at("jsd_score").get<double>();
  record.retained = j.value("retained", false);
  record.errored = j.value("errored", false);
  record.error = j.value("error", std::string{});
  if (j.contains("generation_params")) record.generation_params = j.at("generation_params");
  return record;
}

void append_records(const std::filesystem::path& path,
                    const std::vector<DilemmaRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot open dilemma store for append: " + path.string());
  for (const auto& record : records) {
    out << record_to_json(record).dump() << "\n";
  }
}

std::vector<DilemmaRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dilemma store: " + path.string());
  std::vector<DilemmaRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(json::parse(line)));
  }
  return records;
}

}  // namespace introspect::dilemma
