#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/generator.hpp"
#include "capabench/lexicon.hpp"
#include "capabench/types.hpp"

namespace capabench {

struct Prediction {
  std::string case_id;
  Label label = Label::kNoAde;
  std::optional<double> score;  // in [0, 1] when present
};

enum class AdapterMode {
  kHeuristic,  // built-in classify_heuristic, in process
  kFileBatch,  // write requests.jsonl, read responses.jsonl from a directory
  kHttp,       // POST <url>/classify
};

struct AdapterSpec {
  AdapterMode mode = AdapterMode::kHeuristic;
  std::string endpoint;  // directory (file batch) or base URL (http)
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds timeout{30'000};
  std::size_t max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1'000};  // doubled after every failed attempt
};

/// "heuristic", "file:<dir>", "http:<host:port>" or "http://<host:port>[/prefix]".
AdapterSpec parse_adapter_spec(std::string_view text);
std::string describe(const AdapterSpec& spec);

class AdapterError : public Error {
 public:
  using Error::Error;
};

/// Raised when some cases have no prediction after all retries.
class CoverageError : public Error {
 public:
  CoverageError(std::vector<std::string> missing, std::vector<Prediction> partial);

  const std::vector<std::string>& missing() const noexcept { return missing_; }
  const std::vector<Prediction>& partial() const noexcept { return partial_; }

 private:
  std::vector<std::string> missing_;
  std::vector<Prediction> partial_;
};

struct RunOptions {
  const Lexicon* lexicon = nullptr;  // required by the heuristic adapter
  bool allow_partial = false;
};

struct RunOutcome {
  std::vector<Prediction> predictions;  // sorted by case_id, one per answered case
  std::vector<std::string> missing;     // non-empty only with allow_partial
};

/// Sends every case to the adapter and joins the answers by case_id. Throws AdapterError
/// (unreachable, malformed or duplicate answers) or CoverageError (gaps after retries,
/// unless allow_partial).
RunOutcome run_suite(std::span<const TestCase> cases, const AdapterSpec& adapter, const RunOptions& options = {});

/// ADE iff an ADE or mild-ADE entry occurs as a case-insensitive substring and none of the
/// cue words "not", "without", "never", "no" occurs as a whole word.
class HeuristicClassifier {
 public:
  explicit HeuristicClassifier(const Lexicon& lexicon);
  Label classify(std::string_view text) const;

 private:
  std::vector<std::string> entries_;  // lowercased
};

Label classify_heuristic(std::string_view text, const Lexicon& lexicon);

// Wire formats shared with external model adapters.
std::string serialize_requests(std::span<const TestCase> cases);
std::string serialize_predictions(std::span<const Prediction> predictions);
/// File order is kept; duplicates are not rejected here.
std::vector<Prediction> parse_predictions(std::string_view source);
std::string http_request_body(std::span<const TestCase> cases);
/// Parses `{"predictions": [...]}`; throws AdapterError when malformed.
std::vector<Prediction> parse_http_response(std::string_view body);

}  // namespace capabench
