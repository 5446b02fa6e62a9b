#include "capabench/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "capabench/authoring.hpp"
#include "capabench/evaluation.hpp"
#include "capabench/extraction.hpp"
#include "capabench/generator.hpp"
#include "capabench/io.hpp"
#include "capabench/lexicon.hpp"
#include "capabench/report.hpp"
#include "capabench/runner.hpp"
#include "capabench/template_corpus.hpp"
#include "json.hpp"

#ifndef CAPABENCH_DATA_DIR
#define CAPABENCH_DATA_DIR "data"
#endif

namespace capabench {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string corpus;
  std::string lexicon;
  std::string manifest;
  std::string config;
  std::string adapter = "heuristic";
  std::string baseline;
  std::string out = "out";
  std::string format = "json";
  std::string capability;
  std::string suite;
  std::string predictions;
  std::string spans;
  std::string tagsets;
  std::string bases;
  std::string swap_groups;
  std::optional<std::uint64_t> seed;
  bool allow_partial = false;
  bool allow_drugless = false;
  bool plot_data = false;
  std::size_t max_len = kMaxRuleLength;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  std::size_t max_attempts = 3;
  long timeout_ms = 30'000;
  long backoff_ms = 1'000;
};

struct Input {
  std::string name;
  std::string path;
  std::string content;
};

std::string data_path(std::string_view relative) { return (fs::path(default_data_dir()) / relative).string(); }

Input load(std::string name, const std::string& path) { return {std::move(name), path, read_file(path)}; }

// Written before any other output of the command.
void write_run_manifest(const Options& o, std::string_view command, const std::vector<Input>& inputs, ojson extra) {
  ojson doc;
  doc["command"] = command;
  doc["output_dir"] = o.out;
  ojson list = ojson::array();
  for (const auto& in : inputs) list.push_back({{"name", in.name}, {"path", in.path}, {"sha256", sha256_hex(in.content)}});
  doc["inputs"] = std::move(list);
  for (auto& [key, value] : extra.items()) doc[key] = value;
  write_file(fs::path(o.out) / fmt::format("{}_manifest.json", command), doc.dump(2) + "\n");
}

std::optional<CapabilityKind> capability_filter(const Options& o) {
  if (o.capability.empty()) return std::nullopt;
  const auto kind = parse_capability_kind(o.capability);
  if (!kind) throw UsageError(fmt::format("unknown capability '{}'", o.capability));
  return kind;
}

std::uint64_t parse_seed(std::string_view text, std::string_view source) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(fmt::format("{}: '{}' is not an unsigned integer", source, text));
  }
  return value;
}

// --seed, then the config file, then CAPA_BENCH_SEED, then the built-in default.
SamplingConfig resolve_config(const Options& o, const std::optional<Input>& config_file) {
  SamplingConfig config;
  if (const char* env = std::getenv("CAPA_BENCH_SEED"); env != nullptr && *env != '\0') {
    config.seed = parse_seed(env, "CAPA_BENCH_SEED");
  }
  if (config_file) config = parse_sampling_config(config_file->content, config);
  if (o.seed) config.seed = *o.seed;
  return config;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto corpus_path = o.corpus.empty() ? data_path("templates.jsonl") : o.corpus;
  const auto templates = parse_corpus(read_file(corpus_path));
  std::optional<CorpusManifest> expected;
  if (o.manifest == "table5") {
    expected = reference_manifest();
  } else if (!o.manifest.empty()) {
    expected = parse_manifest(read_file(o.manifest));
  }
  const auto report = validate_corpus(templates, expected, {.allow_drugless = o.allow_drugless});

  out << fmt::format("{:<20} {:>6} {:>6}\n", "capability", "base", "total");
  for (const auto& [kind, count] : report.counts.per_capability) {
    out << fmt::format("{:<20} {:>6} {:>6}\n", to_string(kind), count.base, count.total);
  }
  const auto totals = report.counts.totals();
  out << fmt::format("{:<20} {:>6} {:>6}\n", "total", totals.base, totals.total);
  for (const auto& v : report.violations) {
    out << fmt::format("violation [{}] {}{}\n", to_string(v.kind), v.template_id.empty() ? "" : v.template_id + ": ",
                       v.message);
  }
  out << (report.ok() ? "OK\n" : fmt::format("{} violation(s)\n", report.violations.size()));
  return report.ok() ? kExitOk : kExitFailure;
}

int cmd_generate(const Options& o, std::ostream& out) {
  const auto corpus_in = load("corpus", o.corpus.empty() ? data_path("templates.jsonl") : o.corpus);
  const auto lexicon_in = load("lexicon", o.lexicon.empty() ? data_path("lexicon.json") : o.lexicon);
  std::optional<Input> config_in;
  if (!o.config.empty()) config_in = load("config", o.config);

  const auto templates = parse_corpus(corpus_in.content);
  const auto lexicon = load_lexicon(lexicon_in.content);
  const auto config = resolve_config(o, config_in);
  const auto filter = capability_filter(o);

  std::vector<Input> inputs{corpus_in, lexicon_in};
  if (config_in) inputs.push_back(*config_in);
  ojson extra;
  extra["config"] = ojson::parse(serialize_sampling_config(config));
  extra["capability"] = filter ? ojson(to_string(*filter)) : ojson(nullptr);
  extra["allow_drugless"] = o.allow_drugless;
  extra["fingerprint"] = fingerprint(templates, lexicon);
  write_run_manifest(o, "generate", inputs, std::move(extra));

  const auto suite = build_suite(templates, lexicon, config, {.capability = filter, .allow_drugless = o.allow_drugless});
  write_file(fs::path(o.out) / "suite.jsonl", serialize_suite(suite));

  const auto counts = count_by_test(suite.cases);
  out << fmt::format("{:<40} {:>7}\n", "test", "cases");
  for (const auto& [key, n] : counts) out << fmt::format("{:<40} {:>7}\n", display_name(key), n);
  const auto labels = count_by_label(suite.cases);
  for (const auto& [label, n] : labels) out << fmt::format("{:<40} {:>7}\n", fmt::format("total {}", to_string(label)), n);
  out << fmt::format("{:<40} {:>7}\n", "total", suite.cases.size());

  if (!filter && config == SamplingConfig{.seed = config.seed}) {
    const auto diagnostics = reference_count_diagnostics(counts);
    for (const auto& line : diagnostics) out << "count mismatch: " << line << "\n";
    if (diagnostics.empty()) out << "per-test counts match the published suite\n";
  }
  // soft check against the published mean case lengths, reported only
  const std::map<Label, double> published{{Label::kNoAde, 14.7}, {Label::kAde, 16.6}};
  for (const auto& [label, mean] : mean_token_lengths(suite.cases)) {
    const double target = published.at(label);
    out << fmt::format("mean tokens {}: {:.1f} (published {:.1f}, {})\n", to_string(label), mean, target,
                       std::abs(mean - target) <= 2.0 ? "within 2" : "outside 2");
  }
  out << fmt::format("wrote {}\n", (fs::path(o.out) / "suite.jsonl").string());
  return kExitOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const auto suite_in = load("suite", o.suite.empty() ? (fs::path(o.out) / "suite.jsonl").string() : o.suite);
  auto adapter = parse_adapter_spec(o.adapter);
  adapter.batch_size = o.batch_size;
  adapter.max_in_flight = o.max_in_flight;
  adapter.max_attempts = o.max_attempts;
  adapter.timeout = std::chrono::milliseconds(o.timeout_ms);
  adapter.initial_backoff = std::chrono::milliseconds(o.backoff_ms);

  std::vector<Input> inputs{suite_in};
  std::optional<Lexicon> lexicon;
  if (adapter.mode == AdapterMode::kHeuristic) {
    inputs.push_back(load("lexicon", o.lexicon.empty() ? data_path("lexicon.json") : o.lexicon));
    lexicon = load_lexicon(inputs.back().content);
  }
  const auto suite = parse_suite(suite_in.content);
  ojson extra;
  extra["adapter"] = describe(adapter);
  extra["allow_partial"] = o.allow_partial;
  write_run_manifest(o, "run", inputs, std::move(extra));

  const auto outcome =
      run_suite(suite.cases, adapter, {.lexicon = lexicon ? &*lexicon : nullptr, .allow_partial = o.allow_partial});
  write_file(fs::path(o.out) / "predictions.jsonl", serialize_predictions(outcome.predictions));
  if (!outcome.missing.empty()) {
    err << fmt::format("warning: {} of {} cases unanswered\n", outcome.missing.size(), suite.cases.size());
  }
  out << fmt::format("{} predictions for {} cases\n", outcome.predictions.size(), suite.cases.size());
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  if (o.format != "json" && o.format != "csv" && o.format != "md") {
    throw UsageError(fmt::format("unknown format '{}'", o.format));
  }
  const auto suite_in = load("suite", o.suite.empty() ? (fs::path(o.out) / "suite.jsonl").string() : o.suite);
  const auto predictions_in =
      load("predictions", o.predictions.empty() ? (fs::path(o.out) / "predictions.jsonl").string() : o.predictions);
  std::vector<Input> inputs{suite_in, predictions_in};
  std::optional<BaselineMetrics> baseline;
  if (!o.baseline.empty()) {
    inputs.push_back(load("baseline", o.baseline));
    baseline = parse_baseline(inputs.back().content);
  }
  const auto suite = parse_suite(suite_in.content);
  const auto predictions = parse_predictions(predictions_in.content);
  ojson extra;
  extra["format"] = o.format;
  extra["allow_partial"] = o.allow_partial;
  extra["plot_data"] = o.plot_data;
  write_run_manifest(o, "evaluate", inputs, std::move(extra));

  auto report = evaluate(suite.cases, predictions, {.allow_partial = o.allow_partial});
  if (baseline) report = compare_to_baseline(std::move(report), *baseline);

  const auto path = fs::path(o.out) / fmt::format("report.{}", o.format);
  if (o.format == "json") write_file(path, report_json(report));
  if (o.format == "csv") write_file(path, report_csv(report));
  if (o.format == "md") write_file(path, report_markdown(report));
  if (o.plot_data) write_file(fs::path(o.out) / "plot_data.json", plot_data_json(report));
  out << report_markdown(report);
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  if (o.spans.empty()) throw UsageError("extract needs --spans");
  const auto spans_in = load("spans", o.spans);
  const auto tagsets_in = load("tagsets", o.tagsets.empty() ? data_path("tagsets.txt") : o.tagsets);
  const auto spans = parse_tagged_spans(spans_in.content);
  const auto rules = parse_tagsets(tagsets_in.content);
  ojson extra;
  extra["max_len"] = o.max_len;
  write_run_manifest(o, "extract", {spans_in, tagsets_in}, std::move(extra));

  const auto result = extract_short_noun_phrases(spans, rules, o.max_len);
  ojson doc;
  doc["accepted"] = result.accepted;
  ojson rejected = ojson::array();
  for (const auto& r : result.rejected) {
    rejected.push_back({{"span", r.span_index + 1}, {"surface", r.surface}, {"reason", to_string(r.reason)}});
    out << fmt::format("rejected ({}): {}\n", to_string(r.reason), r.surface);
  }
  doc["rejected"] = std::move(rejected);
  for (const auto& a : result.accepted) out << fmt::format("accepted: {}\n", a);
  write_file(fs::path(o.out) / "extraction.json", doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_author(const Options& o, std::ostream& out) {
  const auto bases_in = load("bases", o.bases.empty() ? data_path("authoring/base_templates.jsonl") : o.bases);
  const auto groups_in =
      load("swap_groups", o.swap_groups.empty() ? data_path("authoring/swap_groups.json") : o.swap_groups);
  const auto bases = parse_base_specs(bases_in.content);
  const auto groups = parse_swap_groups(groups_in.content);
  write_run_manifest(o, "author", {bases_in, groups_in}, ojson::object());

  const auto corpus = author_corpus(bases, groups);
  write_file(fs::path(o.out) / "templates.jsonl", serialize_corpus(corpus));
  const auto totals = count_templates(corpus).totals();
  out << fmt::format("{} base templates, {} total\n", totals.base, totals.total);
  return kExitOk;
}

}  // namespace

std::string default_data_dir() {
  if (const char* env = std::getenv("CAPA_BENCH_DATA"); env != nullptr && *env != '\0') return env;
  return CAPABENCH_DATA_DIR;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capability test suites for ADE classifiers", "capabench"};
  app.require_subcommand(1);
  Options o;

  const auto corpus = [&](CLI::App* c) { c->add_option("--corpus", o.corpus, "template corpus (jsonl)"); };
  const auto lexicon = [&](CLI::App* c) { c->add_option("--lexicon", o.lexicon, "entity lexicon (json)"); };
  const auto outdir = [&](CLI::App* c) { c->add_option("--out", o.out, "output directory")->capture_default_str(); };
  const auto suite = [&](CLI::App* c) { c->add_option("--suite", o.suite, "suite file (default <out>/suite.jsonl)"); };

  auto* validate = app.add_subcommand("validate", "check a template corpus");
  corpus(validate);
  validate->add_option("--manifest", o.manifest, "expected counts: 'table5' or a manifest file");
  validate->add_flag("--allow-drugless", o.allow_drugless, "accept templates without a {drug} placeholder");

  auto* generate = app.add_subcommand("generate", "expand templates into a test suite");
  corpus(generate);
  lexicon(generate);
  outdir(generate);
  generate->add_option("--seed", o.seed, "sampling seed (overrides config and CAPA_BENCH_SEED)");
  generate->add_option("--config", o.config, "sampling config (json)");
  generate->add_option("--capability", o.capability, "keep only this capability");
  generate->add_flag("--allow-drugless", o.allow_drugless, "accept templates without a {drug} placeholder");

  auto* run = app.add_subcommand("run", "classify every case of a suite");
  suite(run);
  lexicon(run);
  outdir(run);
  run->add_option("--adapter", o.adapter, "heuristic | file:<dir> | http:<url>")->capture_default_str();
  run->add_flag("--allow-partial", o.allow_partial, "keep going when some cases stay unanswered");
  run->add_option("--batch-size", o.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--max-in-flight", o.max_in_flight)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--max-attempts", o.max_attempts)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--timeout-ms", o.timeout_ms)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--backoff-ms", o.backoff_ms)->capture_default_str()->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("evaluate", "score predictions against a suite");
  suite(eval);
  outdir(eval);
  eval->add_option("--predictions", o.predictions, "predictions file (default <out>/predictions.jsonl)");
  eval->add_option("--baseline", o.baseline, "held-out baseline metrics (json)");
  eval->add_option("--format", o.format, "json | csv | md")->capture_default_str();
  eval->add_flag("--allow-partial", o.allow_partial, "evaluate answered cases only");
  eval->add_flag("--plot-data", o.plot_data, "also write plot_data.json");

  auto* extract = app.add_subcommand("extract", "filter tagged spans down to short noun phrases");
  outdir(extract);
  extract->add_option("--spans", o.spans, "tagged spans, one per line as surface_TAG tokens");
  extract->add_option("--tagsets", o.tagsets, "accepted tag sequences");
  extract->add_option("--max-len", o.max_len, "longest accepted span")->capture_default_str()->check(CLI::PositiveNumber);

  auto* author = app.add_subcommand("author", "build the template corpus from base templates");
  outdir(author);
  author->add_option("--bases", o.bases, "base templates with variation slots (jsonl)");
  author->add_option("--swap-groups", o.swap_groups, "interchangeable words and conjunctions (json)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (generate->parsed()) return cmd_generate(o, out);
    if (run->parsed()) return cmd_run(o, out, err);
    if (eval->parsed()) return cmd_evaluate(o, out);
    if (extract->parsed()) return cmd_extract(o, out);
    if (author->parsed()) return cmd_author(o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const AdapterError& e) {
    err << "adapter error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CoverageError& e) {
    err << "coverage gap: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace capabench
