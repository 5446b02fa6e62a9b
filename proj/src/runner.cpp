#include "capabench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "capabench/io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace capabench {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kNegationCues[] = {"not", "without", "never", "no"};
constexpr const char* kRequestFile = "requests.jsonl";
constexpr const char* kResponseFile = "responses.jsonl";

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool has_negation_cue(std::string_view lowered) {
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && !std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    const std::size_t start = i;
    while (i < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    const auto word = lowered.substr(start, i - start);
    for (const auto cue : kNegationCues) {
      if (word == cue) return true;
    }
  }
  return false;
}

// Returns an error message instead of throwing so callers pick the error type.
std::optional<std::string> read_prediction(const ordered_json& node, Prediction& out) {
  if (!node.is_object()) return "prediction is not an object";
  const auto id = node.find("case_id");
  const auto label = node.find("label");
  if (id == node.end() || !id->is_string()) return "prediction needs a string 'case_id'";
  if (label == node.end() || !label->is_string()) return "prediction needs a string 'label'";
  const auto parsed = parse_label(label->get<std::string>());
  if (!parsed) return fmt::format("unknown label \"{}\"", label->get<std::string>());
  out.case_id = id->get<std::string>();
  out.label = *parsed;
  out.score.reset();
  if (const auto score = node.find("score"); score != node.end() && !score->is_null()) {
    if (!score->is_number()) return "score must be a number";
    const double s = score->get<double>();
    if (!(s >= 0.0 && s <= 1.0)) return fmt::format("score {} outside [0, 1]", s);
    out.score = s;
  }
  return std::nullopt;
}

ordered_json prediction_json(const Prediction& p) {
  ordered_json node;
  node["case_id"] = p.case_id;
  node["label"] = to_string(p.label);
  if (p.score) node["score"] = *p.score;
  return node;
}

// Split "http://host:port/prefix" into client address and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

struct BatchResult {
  std::vector<Prediction> predictions;
  std::vector<std::string> missing;
  std::optional<std::string> error;  // transport/malformed failure after all attempts
  std::optional<std::string> fatal;  // duplicate prediction; never retried
};

class HttpBatchRunner {
 public:
  HttpBatchRunner(const AdapterSpec& spec, std::span<const TestCase> cases) : spec_(spec), cases_(cases) {
    std::tie(address_, prefix_) = split_url(spec.endpoint);
  }

  BatchResult run(std::size_t begin, std::size_t end, const std::atomic<bool>& stop) const {
    httplib::Client client(address_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(spec_.timeout);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    BatchResult result;
    std::vector<std::size_t> pending(end - begin);
    std::iota(pending.begin(), pending.end(), begin);
    auto backoff = spec_.initial_backoff;

    for (std::size_t attempt = 1; attempt <= spec_.max_attempts && !pending.empty(); ++attempt) {
      if (stop) break;
      if (attempt > 1) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      std::vector<TestCase> batch;
      batch.reserve(pending.size());
      for (const auto i : pending) batch.push_back(cases_[i]);

      const auto response = client.Post(prefix_ + "/classify", http_request_body(batch), "application/json");
      if (!response) {
        result.error = fmt::format("adapter unreachable at {}: {}", spec_.endpoint, httplib::to_string(response.error()));
        continue;
      }
      if (response->status != 200) {
        result.error = fmt::format("adapter returned HTTP {}", response->status);
        continue;
      }
      std::vector<Prediction> answers;
      try {
        answers = parse_http_response(response->body);
      } catch (const AdapterError& e) {
        result.error = fmt::format("malformed response: {}", e.what());
        continue;
      }

      std::unordered_map<std::string_view, std::size_t> wanted;
      for (const auto i : pending) wanted.emplace(cases_[i].case_id, i);
      std::unordered_set<std::string_view> answered;
      std::optional<std::string> unknown;
      for (const auto& p : answers) {
        if (!wanted.contains(p.case_id)) {
          unknown = p.case_id;
          break;
        }
        if (!answered.insert(wanted.find(p.case_id)->first).second) {
          result.fatal = fmt::format("duplicate prediction for case_id '{}'", p.case_id);
          return result;
        }
      }
      if (unknown) {
        result.error = fmt::format("malformed response: case_id '{}' was not requested", *unknown);
        continue;
      }
      result.error.reset();
      for (auto& p : answers) result.predictions.push_back(std::move(p));
      std::erase_if(pending, [&](std::size_t i) { return answered.contains(cases_[i].case_id); });
    }
    for (const auto i : pending) result.missing.push_back(cases_[i].case_id);
    return result;
  }

 private:
  const AdapterSpec& spec_;
  std::span<const TestCase> cases_;
  std::string address_;
  std::string prefix_;
};

std::vector<BatchResult> run_http(std::span<const TestCase> cases, const AdapterSpec& spec) {
  const std::size_t batch_size = std::max<std::size_t>(spec.batch_size, 1);
  const std::size_t n_batches = (cases.size() + batch_size - 1) / batch_size;
  std::vector<BatchResult> results(n_batches);
  const HttpBatchRunner runner(spec, cases);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  const auto worker = [&] {
    for (std::size_t b = next++; b < n_batches && !stop; b = next++) {
      const std::size_t begin = b * batch_size;
      results[b] = runner.run(begin, std::min(begin + batch_size, cases.size()), stop);
      if (results[b].fatal) stop = true;
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(spec.max_in_flight, 1, std::max<std::size_t>(n_batches, 1));
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

BatchResult run_file_batch(std::span<const TestCase> cases, const AdapterSpec& spec) {
  const std::filesystem::path dir(spec.endpoint);
  const auto response_path = dir / kResponseFile;
  // drop answers left over from a previous request set
  std::error_code ec;
  std::filesystem::remove(response_path, ec);
  if (ec) throw IoError(fmt::format("cannot remove stale {}: {}", response_path.string(), ec.message()));
  write_file(dir / kRequestFile, serialize_requests(cases));

  auto backoff = spec.initial_backoff;
  for (std::size_t attempt = 1; attempt <= spec.max_attempts; ++attempt) {
    if (std::filesystem::exists(response_path)) break;
    if (attempt < spec.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  if (!std::filesystem::exists(response_path)) {
    throw AdapterError(fmt::format("requests written to {}; no responses at {} after {} attempt(s)",
                                   (dir / kRequestFile).string(), response_path.string(), spec.max_attempts));
  }

  std::vector<Prediction> answers;
  try {
    answers = parse_predictions(read_file(response_path));
  } catch (const ParseError& e) {
    throw AdapterError(fmt::format("malformed response file {}: {}", response_path.string(), e.what()));
  }

  std::unordered_set<std::string_view> wanted;
  for (const auto& c : cases) wanted.insert(c.case_id);
  BatchResult result;
  std::unordered_set<std::string> answered;
  for (auto& p : answers) {
    if (!wanted.contains(p.case_id)) {
      throw AdapterError(fmt::format("malformed response: case_id '{}' was not requested", p.case_id));
    }
    if (!answered.insert(p.case_id).second) {
      throw AdapterError(fmt::format("duplicate prediction for case_id '{}'", p.case_id));
    }
    result.predictions.push_back(std::move(p));
  }
  for (const auto& c : cases) {
    if (!answered.contains(c.case_id)) result.missing.push_back(c.case_id);
  }
  return result;
}

}  // namespace

CoverageError::CoverageError(std::vector<std::string> missing, std::vector<Prediction> partial)
    : Error(fmt::format("{} case(s) without a prediction: {}{}", missing.size(),
                        fmt::join(missing.begin(), missing.begin() + std::min<std::size_t>(missing.size(), 10), ", "),
                        missing.size() > 10 ? ", ..." : "")),
      missing_(std::move(missing)),
      partial_(std::move(partial)) {}

AdapterSpec parse_adapter_spec(std::string_view text) {
  AdapterSpec spec;
  if (text == "heuristic") {
    spec.mode = AdapterMode::kHeuristic;
  } else if (text.starts_with("file:") && text.size() > 5) {
    spec.mode = AdapterMode::kFileBatch;
    spec.endpoint = std::string(text.substr(5));
  } else if (text.starts_with("http://")) {
    spec.mode = AdapterMode::kHttp;
    spec.endpoint = std::string(text);
  } else if (text.starts_with("http:") && text.size() > 5) {
    spec.mode = AdapterMode::kHttp;
    spec.endpoint = "http://" + std::string(text.substr(5));
  } else {
    throw Error(fmt::format("unknown adapter \"{}\"; expected heuristic, file:<dir> or http:<url>", text));
  }
  return spec;
}

std::string describe(const AdapterSpec& spec) {
  switch (spec.mode) {
    case AdapterMode::kHeuristic: return "heuristic";
    case AdapterMode::kFileBatch: return "file:" + spec.endpoint;
    case AdapterMode::kHttp: return spec.endpoint;
  }
  return "?";
}

RunOutcome run_suite(std::span<const TestCase> cases, const AdapterSpec& adapter, const RunOptions& options) {
  if (cases.empty()) throw Error("cannot run an empty suite");
  if (adapter.batch_size == 0 || adapter.max_in_flight == 0 || adapter.max_attempts == 0) {
    throw Error("batch_size, max_in_flight and max_attempts must be at least 1");
  }

  std::vector<BatchResult> results;
  switch (adapter.mode) {
    case AdapterMode::kHeuristic: {
      if (options.lexicon == nullptr) throw Error("the heuristic adapter needs a lexicon");
      const HeuristicClassifier classifier(*options.lexicon);
      BatchResult all;
      all.predictions.reserve(cases.size());
      for (const auto& c : cases) all.predictions.push_back({c.case_id, classifier.classify(c.text), std::nullopt});
      results.push_back(std::move(all));
      break;
    }
    case AdapterMode::kFileBatch:
      results.push_back(run_file_batch(cases, adapter));
      break;
    case AdapterMode::kHttp:
      results = run_http(cases, adapter);
      break;
  }

  RunOutcome outcome;
  std::optional<std::string> error;
  for (auto& r : results) {
    if (r.fatal) throw AdapterError(*r.fatal);
    if (r.error && !error) error = r.error;
    for (auto& p : r.predictions) outcome.predictions.push_back(std::move(p));
    for (auto& id : r.missing) outcome.missing.push_back(std::move(id));
  }
  if (outcome.predictions.empty() && error) throw AdapterError(*error);

  std::sort(outcome.predictions.begin(), outcome.predictions.end(),
            [](const Prediction& a, const Prediction& b) { return a.case_id < b.case_id; });
  const auto dup = std::adjacent_find(outcome.predictions.begin(), outcome.predictions.end(),
                                      [](const Prediction& a, const Prediction& b) { return a.case_id == b.case_id; });
  if (dup != outcome.predictions.end()) {
    throw AdapterError(fmt::format("duplicate prediction for case_id '{}'", dup->case_id));
  }
  std::sort(outcome.missing.begin(), outcome.missing.end());
  if (!outcome.missing.empty() && !options.allow_partial) {
    throw CoverageError(std::move(outcome.missing), std::move(outcome.predictions));
  }
  return outcome;
}

HeuristicClassifier::HeuristicClassifier(const Lexicon& lexicon) {
  for (const auto& e : lexicon.ades) entries_.push_back(lowercase(e));
  for (const auto& e : lexicon.mild_ades) entries_.push_back(lowercase(e));
}

Label HeuristicClassifier::classify(std::string_view text) const {
  const auto lowered = lowercase(text);
  const bool mentions_ade = std::any_of(entries_.begin(), entries_.end(), [&](const std::string& entry) {
    return lowered.find(entry) != std::string::npos;
  });
  return mentions_ade && !has_negation_cue(lowered) ? Label::kAde : Label::kNoAde;
}

Label classify_heuristic(std::string_view text, const Lexicon& lexicon) {
  return HeuristicClassifier(lexicon).classify(text);
}

std::string serialize_requests(std::span<const TestCase> cases) {
  std::string out;
  for (const auto& c : cases) {
    ordered_json node;
    node["case_id"] = c.case_id;
    node["text"] = c.text;
    out += node.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_predictions(std::span<const Prediction> predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += prediction_json(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions(std::string_view source) {
  std::vector<Prediction> out;
  for (const auto& [number, text] : record_lines(source, /*skip_comments=*/false)) {
    ordered_json node;
    try {
      node = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError(number, fmt::format("syntax error: {}", e.what()));
    }
    Prediction p;
    if (const auto problem = read_prediction(node, p)) throw ParseError(number, *problem);
    out.push_back(std::move(p));
  }
  return out;
}

std::string http_request_body(std::span<const TestCase> cases) {
  ordered_json body;
  body["cases"] = ordered_json::array();
  for (const auto& c : cases) {
    ordered_json node;
    node["case_id"] = c.case_id;
    node["text"] = c.text;
    body["cases"].push_back(std::move(node));
  }
  return body.dump();
}

std::vector<Prediction> parse_http_response(std::string_view body) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(body);
  } catch (const ordered_json::parse_error& e) {
    throw AdapterError(fmt::format("response is not JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("predictions") || !doc["predictions"].is_array()) {
    throw AdapterError("response needs a 'predictions' array");
  }
  std::vector<Prediction> out;
  for (const auto& node : doc["predictions"]) {
    Prediction p;
    if (const auto problem = read_prediction(node, p)) throw AdapterError(*problem);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace capabench
