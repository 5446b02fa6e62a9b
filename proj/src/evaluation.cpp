#include "capabench/evaluation.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"

namespace capabench {

namespace {

// Predicted label per case, in case order; nullopt where unanswered.
std::vector<std::optional<Label>> join(std::span<const TestCase> cases, std::span<const Prediction> predictions,
                                       bool allow_partial, std::size_t* unanswered = nullptr) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) index.emplace(cases[i].case_id, i);

  std::vector<std::optional<Label>> joined(cases.size());
  for (const auto& p : predictions) {
    const auto it = index.find(p.case_id);
    if (it == index.end()) throw EvaluationError(fmt::format("prediction for unknown case_id '{}'", p.case_id));
    auto& slot = joined[it->second];
    if (slot) throw EvaluationError(fmt::format("duplicate prediction for case_id '{}'", p.case_id));
    slot = p.label;
  }
  const auto missing = static_cast<std::size_t>(std::count(joined.begin(), joined.end(), std::nullopt));
  if (missing > 0 && !allow_partial) {
    throw EvaluationError(fmt::format("{} of {} cases have no prediction (use --allow-partial to evaluate anyway)",
                                      missing, cases.size()));
  }
  if (unanswered) *unanswered = missing;
  return joined;
}

double read_unit(const nlohmann::json& node, const char* name, std::string_view where) {
  if (!node.contains(name) || !node[name].is_number()) {
    throw ParseError(0, fmt::format("baseline {}: missing numeric '{}'", where, name));
  }
  const double v = node[name].get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw ParseError(0, fmt::format("baseline {}.{} = {} outside [0, 1]", where, name, v));
  return v;
}

}  // namespace

BaselineMetrics parse_baseline(std::string_view source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, fmt::format("baseline syntax error: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("per_class") || !doc["per_class"].is_object()) {
    throw ParseError(0, "baseline needs a 'per_class' object");
  }
  BaselineMetrics b;
  if (doc.contains("model_name")) {
    if (!doc["model_name"].is_string()) throw ParseError(0, "baseline 'model_name' must be a string");
    b.model_name = doc["model_name"].get<std::string>();
  }
  for (const auto label : {Label::kAde, Label::kNoAde}) {
    const auto name = std::string(to_string(label));
    if (!doc["per_class"].contains(name)) throw ParseError(0, fmt::format("baseline: missing class '{}'", name));
    const auto& node = doc["per_class"][name];
    b.per_class[label] = {read_unit(node, "p", name), read_unit(node, "r", name), read_unit(node, "f1", name)};
  }
  return b;
}

std::optional<std::size_t> SuiteReport::worst() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].delta) continue;
    if (!best || *results[i].delta < *results[*best].delta) best = i;
  }
  return best;
}

SuiteReport evaluate(std::span<const TestCase> cases, std::span<const Prediction> predictions,
                     const EvaluationOptions& options) {
  SuiteReport report;
  const auto joined = join(cases, predictions, options.allow_partial, &report.n_unanswered);
  report.partial = report.n_unanswered > 0;

  std::map<TestKey, TestResult> tests;
  std::map<std::string, TemplateResult> templates;
  std::map<PlaceholderKind, EntityBreakdown> entities;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!joined[i]) continue;
    const auto& c = cases[i];
    const bool passed = *joined[i] == c.gold;

    auto& test = tests[c.key()];
    test.key = c.key();
    ++test.n_cases;
    test.n_passed += passed;

    auto& tmpl = templates[c.template_id];
    tmpl.template_id = c.template_id;
    tmpl.key = c.key();
    ++tmpl.n_cases;
    tmpl.n_passed += passed;

    for (const auto& [name, value] : c.fills) {
      const auto kind = parse_placeholder_kind(name);
      if (!kind) continue;
      auto& breakdown = entities[*kind];
      breakdown.kind = *kind;
      auto& ratio = breakdown.by_entity[value][c.capability.kind];
      ++ratio.denominator;
      ratio.numerator += passed;
    }
  }
  for (auto& [key, result] : tests) report.results.push_back(result);
  for (auto& [id, result] : templates) report.per_template.push_back(std::move(result));
  for (auto& [kind, breakdown] : entities) report.per_entity.push_back(std::move(breakdown));
  report.histogram = per_template_histogram(report, options.histogram_bins);
  return report;
}

std::map<Label, std::optional<Ratio>> per_class_recall(std::span<const TestCase> cases,
                                                       std::span<const Prediction> predictions,
                                                       const EvaluationOptions& options) {
  const auto joined = join(cases, predictions, options.allow_partial);
  std::map<Label, Ratio> counts;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!joined[i]) continue;
    auto& r = counts[cases[i].gold];
    ++r.denominator;
    r.numerator += *joined[i] == cases[i].gold;
  }
  std::map<Label, std::optional<Ratio>> out{{Label::kNoAde, std::nullopt}, {Label::kAde, std::nullopt}};
  for (const auto& [label, ratio] : counts) out[label] = ratio;
  return out;
}

SuiteReport compare_to_baseline(SuiteReport report, const BaselineMetrics& baseline) {
  for (auto& result : report.results) {
    const auto it = baseline.per_class.find(result.key.label);
    if (it == baseline.per_class.end()) continue;
    result.delta = result.pass_rate() - it->second.recall;
  }
  report.baseline = baseline;
  return report;
}

std::vector<std::size_t> histogram(std::span<const Ratio> ratios, std::size_t n_bins) {
  if (n_bins == 0) throw EvaluationError("histogram needs at least one bin");
  std::vector<std::size_t> bins(n_bins, 0);
  for (const auto& r : ratios) {
    if (r.denominator == 0) continue;
    // floor(ratio * n_bins) with integers only
    const auto bin = std::min<std::uint64_t>(r.numerator * n_bins / r.denominator, n_bins - 1);
    ++bins[bin];
  }
  return bins;
}

std::vector<std::size_t> per_template_histogram(const SuiteReport& report, std::size_t n_bins) {
  std::vector<Ratio> ratios;
  ratios.reserve(report.per_template.size());
  for (const auto& t : report.per_template) ratios.push_back(t.ratio());
  return histogram(ratios, n_bins);
}

EntityBreakdown per_entity_breakdown(std::span<const TestCase> cases, std::span<const Prediction> predictions,
                                     PlaceholderKind kind, const EvaluationOptions& options) {
  const auto joined = join(cases, predictions, options.allow_partial);
  const auto name = to_string(kind);
  EntityBreakdown breakdown{kind, {}};
  bool present = false;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (const auto& [fill_name, value] : cases[i].fills) {
      if (fill_name != name) continue;
      present = true;
      if (!joined[i]) continue;
      auto& ratio = breakdown.by_entity[value][cases[i].capability.kind];
      ++ratio.denominator;
      ratio.numerator += *joined[i] == cases[i].gold;
    }
  }
  if (!present) throw EvaluationError(fmt::format("no case in the suite fills {{{}}}", name));
  return breakdown;
}

}  // namespace capabench
