#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/generator.hpp"
#include "capabench/runner.hpp"
#include "capabench/types.hpp"

namespace capabench {

class EvaluationError : public Error {
 public:
  using Error::Error;
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Held-out test-set scores of a model. Supplied as input, never computed here.
struct BaselineMetrics {
  std::string model_name;
  std::map<Label, ClassMetrics> per_class;
};

/// `{model_name, per_class: {ade: {p, r, f1}, no_ade: {p, r, f1}}}`, values in [0, 1].
BaselineMetrics parse_baseline(std::string_view source);

struct TestResult {
  TestKey key;
  std::size_t n_cases = 0;
  std::size_t n_passed = 0;
  std::optional<double> delta;  // pass_rate - baseline recall of key.label

  Ratio ratio() const { return {n_passed, n_cases}; }
  double pass_rate() const { return ratio().value(); }
};

struct TemplateResult {
  std::string template_id;
  TestKey key;
  std::size_t n_cases = 0;
  std::size_t n_passed = 0;

  Ratio ratio() const { return {n_passed, n_cases}; }
};

/// Pass counts per entity value and capability for one placeholder kind.
struct EntityBreakdown {
  PlaceholderKind kind;
  std::map<std::string, std::map<CapabilityKind, Ratio>> by_entity;
};

struct SuiteReport {
  std::vector<TestResult> results;  // (capability, variant, label) order
  std::optional<BaselineMetrics> baseline;
  std::vector<TemplateResult> per_template;  // template id order
  std::vector<EntityBreakdown> per_entity;   // one per placeholder kind present
  std::vector<std::size_t> histogram;        // per-template pass ratios over [0, 1]
  bool partial = false;
  std::size_t n_unanswered = 0;

  /// Index of the result with the lowest delta, once a baseline is attached.
  std::optional<std::size_t> worst() const;
};

struct EvaluationOptions {
  bool allow_partial = false;
  std::size_t histogram_bins = 10;
};

/// A case passes iff its predicted label equals its gold label. Throws EvaluationError on
/// unknown or duplicate case ids, and on missing predictions unless allow_partial.
SuiteReport evaluate(std::span<const TestCase> cases, std::span<const Prediction> predictions,
                     const EvaluationOptions& options = {});

/// Recall per gold label over the whole suite; absent for a label with no answered cases.
std::map<Label, std::optional<Ratio>> per_class_recall(std::span<const TestCase> cases,
                                                       std::span<const Prediction> predictions,
                                                       const EvaluationOptions& options = {});

/// Attaches the baseline: delta = pass_rate - baseline recall of the test's label.
SuiteReport compare_to_baseline(SuiteReport report, const BaselineMetrics& baseline);

/// Bin i covers [i/n, (i+1)/n); the last bin also holds 1.0.
std::vector<std::size_t> histogram(std::span<const Ratio> ratios, std::size_t n_bins);
std::vector<std::size_t> per_template_histogram(const SuiteReport& report, std::size_t n_bins = 10);

/// Throws EvaluationError when no case fills `kind`.
EntityBreakdown per_entity_breakdown(std::span<const TestCase> cases, std::span<const Prediction> predictions,
                                     PlaceholderKind kind, const EvaluationOptions& options = {});

}  // namespace capabench
