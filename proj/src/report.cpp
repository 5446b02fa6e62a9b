#include "capabench/report.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "json.hpp"

namespace capabench {

using ojson = nlohmann::ordered_json;

namespace {

std::optional<double> baseline_recall(const SuiteReport& report, Label label) {
  if (!report.baseline) return std::nullopt;
  const auto it = report.baseline->per_class.find(label);
  if (it == report.baseline->per_class.end()) return std::nullopt;
  return it->second.recall;
}

ojson optional_number(std::optional<double> value) {
  return value ? ojson(round3(*value)) : ojson(nullptr);
}

ojson ratio_json(const Ratio& r) {
  return {{"n_passed", r.numerator}, {"n_cases", r.denominator}, {"pass_rate", round3(r.value())}};
}

std::string fixed3(std::optional<double> value) { return value ? fmt::format("{:.3f}", *value) : std::string(); }

std::string signed3(std::optional<double> value) {
  if (!value) return {};
  // avoid printing -0.000
  const double v = round3(*value);
  return fmt::format("{:+.3f}", v == 0.0 ? 0.0 : v);
}

}  // namespace

double round3(double value) {
  const double r = std::round(value * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;
}

std::string report_json(const SuiteReport& report) {
  ojson doc;
  doc["partial"] = report.partial;
  doc["n_unanswered"] = report.n_unanswered;
  if (report.baseline) {
    ojson per_class = ojson::object();
    for (const auto& [label, m] : report.baseline->per_class) {
      per_class[std::string(to_string(label))] = {{"p", m.precision}, {"r", m.recall}, {"f1", m.f1}};
    }
    doc["baseline"] = {{"model_name", report.baseline->model_name}, {"per_class", per_class}};
  } else {
    doc["baseline"] = nullptr;
  }

  ojson results = ojson::array();
  for (const auto& r : report.results) {
    ojson row = {{"test", display_name(r.key)},
                 {"capability", to_string(r.key.capability.kind)},
                 {"variant", to_string(r.key.capability.variant)},
                 {"label", to_string(r.key.label)}};
    row.update(ratio_json(r.ratio()));
    row["baseline_recall"] = optional_number(baseline_recall(report, r.key.label));
    row["delta"] = optional_number(r.delta);
    results.push_back(std::move(row));
  }
  doc["results"] = std::move(results);
  const auto worst = report.worst();
  doc["worst"] = worst ? ojson(display_name(report.results[*worst].key)) : ojson(nullptr);

  ojson templates = ojson::array();
  for (const auto& t : report.per_template) {
    ojson row = {{"template_id", t.template_id}, {"test", display_name(t.key)}};
    row.update(ratio_json(t.ratio()));
    templates.push_back(std::move(row));
  }
  doc["per_template"] = std::move(templates);

  ojson entities = ojson::object();
  for (const auto& breakdown : report.per_entity) {
    ojson by_entity = ojson::object();
    for (const auto& [entity, by_capability] : breakdown.by_entity) {
      ojson caps = ojson::object();
      for (const auto& [capability, ratio] : by_capability) caps[std::string(to_string(capability))] = ratio_json(ratio);
      by_entity[entity] = std::move(caps);
    }
    entities[std::string(to_string(breakdown.kind))] = std::move(by_entity);
  }
  doc["per_entity"] = std::move(entities);
  doc["histogram"] = report.histogram;
  return doc.dump(2) + "\n";
}

std::string report_csv(const SuiteReport& report) {
  std::string out = "capability,variant,label,n_cases,n_passed,pass_rate,baseline_recall,delta\n";
  for (const auto& r : report.results) {
    out += fmt::format("{},{},{},{},{},{:.3f},{},{}\n", to_string(r.key.capability.kind),
                       to_string(r.key.capability.variant), to_string(r.key.label), r.n_cases, r.n_passed,
                       round3(r.pass_rate()), fixed3(baseline_recall(report, r.key.label)), signed3(r.delta));
  }
  return out;
}

std::string report_markdown(const SuiteReport& report) {
  std::string out;
  if (report.baseline) out += fmt::format("Baseline: {}\n\n", report.baseline->model_name);
  if (report.partial) out += fmt::format("Partial run: {} cases unanswered.\n\n", report.n_unanswered);
  out += "| Test | Passed | Cases | Pass rate | Baseline recall | Delta |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : report.results) {
    out += fmt::format("| {} | {} | {} | {:.3f} | {} | {} |\n", display_name(r.key), r.n_passed, r.n_cases,
                       round3(r.pass_rate()), fixed3(baseline_recall(report, r.key.label)), signed3(r.delta));
  }
  if (const auto worst = report.worst()) {
    out += fmt::format("\nLargest gap below baseline: {} ({}).\n", display_name(report.results[*worst].key),
                       signed3(report.results[*worst].delta));
  }
  return out;
}

std::string plot_data_json(const SuiteReport& report, std::size_t n_bins) {
  ojson doc;
  doc["model_name"] = report.baseline ? ojson(report.baseline->model_name) : ojson(nullptr);
  ojson points = ojson::array();
  for (const auto& r : report.results) {
    points.push_back({{"test", display_name(r.key)},
                      {"label", to_string(r.key.label)},
                      {"pass_rate", round3(r.pass_rate())},
                      {"baseline_recall", optional_number(baseline_recall(report, r.key.label))}});
  }
  doc["points"] = std::move(points);

  std::map<TestKey, std::vector<Ratio>> ratios;
  for (const auto& t : report.per_template) ratios[t.key].push_back(t.ratio());
  ojson histograms = ojson::array();
  for (const auto& [key, values] : ratios) {
    histograms.push_back({{"test", display_name(key)}, {"bins", histogram(values, n_bins)}});
  }
  doc["n_bins"] = n_bins;
  doc["histograms"] = std::move(histograms);
  return doc.dump(2) + "\n";
}

}  // namespace capabench
