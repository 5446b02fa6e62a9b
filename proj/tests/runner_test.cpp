#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "capabench/runner.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace capabench;
using namespace std::chrono_literals;

namespace {

std::vector<TestCase> small_cases(std::size_t n) {
  std::vector<TestCase> out;
  for (std::size_t i = 0; i < n; ++i) {
    TestCase c;
    c.case_id = fmt::format("t#{:04}", i);
    c.template_id = "t";
    c.capability = {CapabilityKind::kNegation, Variant::kNone};
    c.gold = i % 2 ? Label::kAde : Label::kNoAde;
    c.text = i % 2 ? "I took zoloft and got Insomnia." : "I took zoloft without Insomnia.";
    out.push_back(c);
  }
  return out;
}

AdapterSpec fast(AdapterSpec spec) {
  spec.initial_backoff = 5ms;
  spec.timeout = 2'000ms;
  return spec;
}

// Answers /classify with a handler over the parsed cases.
class FakeAdapter {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json& cases, int call)>;

  explicit FakeAdapter(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = calls_++;
      auto answer = handler_(nlohmann::json::parse(req.body)["cases"], call);
      if (answer.is_number()) {
        res.status = answer.get<int>();
        return;
      }
      res.set_content(answer.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeAdapter() {
    server_.stop();
    thread_.join();
  }

  AdapterSpec spec() const { return fast(parse_adapter_spec(fmt::format("http:127.0.0.1:{}", port_))); }
  int calls() const { return calls_; }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
};

// With `skip_every`, drops every case whose id number n has (n + 1) % skip_every == 0.
nlohmann::json answer_all(const nlohmann::json& cases, std::size_t skip_every = 0) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& c : cases) {
    const auto id = c["case_id"].get<std::string>();
    const auto n = std::stoul(id.substr(id.find('#') + 1));
    if (skip_every && (n + 1) % skip_every == 0) continue;
    const auto text = c["text"].get<std::string>();
    preds.push_back({{"case_id", c["case_id"]}, {"label", text.find("without") == std::string::npos ? "ade" : "no_ade"}});
  }
  return {{"predictions", preds}};
}

// Blocks until requests.jsonl holds `n` complete lines.
void wait_for_requests(const std::filesystem::path& dir, std::size_t n) {
  const auto path = dir / "requests.jsonl";
  for (int i = 0; i < 2000; ++i) {
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
      const auto text = read_file(path);
      if (static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == n) return;
    }
    std::this_thread::sleep_for(1ms);
  }
}

}  // namespace

TEST(Heuristic, Examples) {
  const auto& lex = support::shipped_lexicon();
  EXPECT_EQ(classify_heuristic("I am taking zoloft without suffering from acid reflux.", lex), Label::kNoAde);
  EXPECT_EQ(classify_heuristic("That's not true, I took zoloft and encountered Insomnia.", lex), Label::kNoAde);
  EXPECT_EQ(classify_heuristic("the weather is nice", lex), Label::kNoAde);
  EXPECT_EQ(classify_heuristic("I took zoloft and encountered INSOMNIA.", lex), Label::kAde);
}

TEST(Heuristic, CuesAreWholeWords) {
  const auto& lex = support::shipped_lexicon();
  EXPECT_EQ(classify_heuristic("Nothing helped, zoloft gave me Insomnia.", lex), Label::kAde);
  EXPECT_EQ(classify_heuristic("No, zoloft gave me Insomnia.", lex), Label::kNoAde);
  EXPECT_EQ(classify_heuristic("zoloft gave me Insomnia, never again", lex), Label::kNoAde);
}

TEST(Heuristic, NegationSuiteSplitsByLabel) {
  const auto& suite = support::default_suite();
  const HeuristicClassifier classifier(support::shipped_lexicon());
  for (const auto& c : suite.cases) {
    if (c.capability.kind != CapabilityKind::kNegation) continue;
    EXPECT_EQ(classifier.classify(c.text), Label::kNoAde) << c.text;
  }
}

TEST(AdapterSpecParse, Forms) {
  EXPECT_EQ(parse_adapter_spec("heuristic").mode, AdapterMode::kHeuristic);
  const auto file = parse_adapter_spec("file:/tmp/x");
  EXPECT_EQ(file.mode, AdapterMode::kFileBatch);
  EXPECT_EQ(file.endpoint, "/tmp/x");
  EXPECT_EQ(parse_adapter_spec("http:localhost:8080").endpoint, "http://localhost:8080");
  EXPECT_EQ(parse_adapter_spec("http://localhost:8080/v1").endpoint, "http://localhost:8080/v1");
  EXPECT_EQ(describe(parse_adapter_spec("file:/tmp/x")), "file:/tmp/x");
  EXPECT_THROW(parse_adapter_spec("grpc:x"), Error);
  EXPECT_THROW(parse_adapter_spec("file:"), Error);
}

TEST(WireFormat, RequestsAndPredictions) {
  const auto cases = small_cases(2);
  EXPECT_EQ(serialize_requests(cases),
            "{\"case_id\":\"t#0000\",\"text\":\"I took zoloft without Insomnia.\"}\n"
            "{\"case_id\":\"t#0001\",\"text\":\"I took zoloft and got Insomnia.\"}\n");
  EXPECT_EQ(http_request_body(cases),
            R"({"cases":[{"case_id":"t#0000","text":"I took zoloft without Insomnia."},)"
            R"({"case_id":"t#0001","text":"I took zoloft and got Insomnia."}]})");
  const std::vector<Prediction> preds{{"a", Label::kAde, 0.75}, {"b", Label::kNoAde, std::nullopt}};
  const auto text = serialize_predictions(preds);
  EXPECT_EQ(text, "{\"case_id\":\"a\",\"label\":\"ade\",\"score\":0.75}\n{\"case_id\":\"b\",\"label\":\"no_ade\"}\n");
  const auto back = parse_predictions(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].case_id, "a");
  EXPECT_EQ(back[0].score, 0.75);
  EXPECT_EQ(back[1].label, Label::kNoAde);
  EXPECT_FALSE(back[1].score);
}

TEST(WireFormat, MalformedPredictions) {
  EXPECT_THROW(parse_predictions("{\"case_id\":\"a\"}\n"), ParseError);
  EXPECT_THROW(parse_predictions("{\"case_id\":\"a\",\"label\":\"maybe\"}\n"), ParseError);
  EXPECT_THROW(parse_predictions("{\"case_id\":\"a\",\"label\":\"ade\",\"score\":1.5}\n"), ParseError);
  EXPECT_THROW(parse_predictions("not json\n"), ParseError);
  EXPECT_THROW(parse_http_response("{}"), AdapterError);
  EXPECT_THROW(parse_http_response("[1]"), AdapterError);
  EXPECT_THROW(parse_http_response(R"({"predictions":[{"case_id":"a"}]})"), AdapterError);
  EXPECT_EQ(parse_http_response(R"({"predictions":[{"case_id":"a","label":"ade"}]})").size(), 1u);
}

TEST(RunSuite, HeuristicIsIdempotent) {
  const auto& suite = support::default_suite();
  RunOptions options{&support::shipped_lexicon(), false};
  const auto a = run_suite(suite.cases, parse_adapter_spec("heuristic"), options);
  const auto b = run_suite(suite.cases, parse_adapter_spec("heuristic"), options);
  EXPECT_EQ(a.predictions.size(), suite.cases.size());
  EXPECT_EQ(serialize_predictions(a.predictions), serialize_predictions(b.predictions));
  EXPECT_TRUE(a.missing.empty());
}

TEST(RunSuite, RejectsBadArguments) {
  const auto cases = small_cases(2);
  EXPECT_THROW(run_suite({}, parse_adapter_spec("heuristic"), {&support::shipped_lexicon()}), Error);
  EXPECT_THROW(run_suite(cases, parse_adapter_spec("heuristic"), {}), Error);
  auto spec = parse_adapter_spec("heuristic");
  spec.batch_size = 0;
  EXPECT_THROW(run_suite(cases, spec, {&support::shipped_lexicon()}), Error);
}

TEST(RunSuite, HttpBatchesAndJoins) {
  FakeAdapter adapter([](const nlohmann::json& cases, int) { return answer_all(cases); });
  auto spec = adapter.spec();
  spec.batch_size = 3;
  spec.max_in_flight = 2;
  const auto cases = small_cases(10);
  const auto outcome = run_suite(cases, spec);
  ASSERT_EQ(outcome.predictions.size(), 10u);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(outcome.predictions[i].case_id, cases[i].case_id);
    EXPECT_EQ(outcome.predictions[i].label, cases[i].gold);
  }
  EXPECT_EQ(adapter.calls(), 4);
}

TEST(RunSuite, HttpMissingAnswersRaiseCoverageError) {
  // the same three cases go unanswered on every attempt
  FakeAdapter adapter([](const nlohmann::json& cases, int) { return answer_all(cases, 3); });
  auto spec = adapter.spec();
  spec.batch_size = 3;
  spec.max_attempts = 2;
  const auto cases = small_cases(9);
  try {
    run_suite(cases, spec);
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.missing(), (std::vector<std::string>{"t#0002", "t#0005", "t#0008"}));
    EXPECT_EQ(e.partial().size(), 6u);
    EXPECT_NE(std::string(e.what()).find("t#0005"), std::string::npos);
  }
  spec.max_attempts = 1;
  const auto outcome = run_suite(cases, spec, {nullptr, true});
  EXPECT_EQ(outcome.predictions.size(), 6u);
  EXPECT_EQ(outcome.missing.size(), 3u);
}

TEST(RunSuite, HttpRetriesOnlyUnansweredCases) {
  std::atomic<int> second_batch_size{-1};
  FakeAdapter adapter([&](const nlohmann::json& cases, int call) {
    if (call == 0) return answer_all(cases, 2);
    second_batch_size = static_cast<int>(cases.size());
    return answer_all(cases);
  });
  auto spec = adapter.spec();
  spec.batch_size = 4;
  const auto outcome = run_suite(small_cases(4), spec);
  EXPECT_EQ(outcome.predictions.size(), 4u);
  EXPECT_EQ(second_batch_size, 2);
}

TEST(RunSuite, HttpDuplicateIsFatal) {
  FakeAdapter adapter([](const nlohmann::json& cases, int) {
    auto answer = answer_all(cases);
    answer["predictions"].push_back(answer["predictions"][0]);
    return answer;
  });
  EXPECT_THROW(run_suite(small_cases(3), adapter.spec()), AdapterError);
  EXPECT_EQ(adapter.calls(), 1);
}

TEST(RunSuite, HttpServerErrorIsRetried) {
  FakeAdapter adapter([](const nlohmann::json& cases, int call) -> nlohmann::json {
    if (call < 2) return 500;
    return answer_all(cases);
  });
  auto spec = adapter.spec();
  spec.max_attempts = 3;
  EXPECT_EQ(run_suite(small_cases(3), spec).predictions.size(), 3u);
  EXPECT_EQ(adapter.calls(), 3);
}

TEST(RunSuite, HttpPersistentFailureIsAdapterError) {
  FakeAdapter adapter([](const nlohmann::json&, int) -> nlohmann::json { return 503; });
  auto spec = adapter.spec();
  spec.max_attempts = 2;
  EXPECT_THROW(run_suite(small_cases(2), spec), AdapterError);
}

TEST(RunSuite, HttpUnknownCaseIsMalformed) {
  FakeAdapter adapter([](const nlohmann::json&, int) -> nlohmann::json {
    return {{"predictions", {{{"case_id", "zzz"}, {"label", "ade"}}}}};
  });
  auto spec = adapter.spec();
  spec.max_attempts = 1;
  EXPECT_THROW(run_suite(small_cases(2), spec), AdapterError);
}

TEST(RunSuite, HttpUnreachable) {
  // nothing listens on the reserved port 1
  auto spec = fast(parse_adapter_spec("http:127.0.0.1:1"));
  spec.max_attempts = 2;
  EXPECT_THROW(run_suite(small_cases(2), spec), AdapterError);
}

TEST(RunSuite, FileBatchRoundTrip) {
  support::TempDir dir;
  const auto cases = small_cases(5);
  write_file(dir / "responses.jsonl", "{\"case_id\":\"stale\",\"label\":\"ade\"}\n");
  std::thread responder([&] {
    const auto requests = dir / "requests.jsonl";
    wait_for_requests(dir.path(), cases.size());
    std::string out;
    const auto text = read_file(requests);
    for (const auto& [n, line] : record_lines(text, false)) {
      const auto req = nlohmann::json::parse(line);
      const bool ade = req["text"].get<std::string>().find("without") == std::string::npos;
      out += nlohmann::json{{"case_id", req["case_id"]}, {"label", ade ? "ade" : "no_ade"}, {"score", 0.5}}.dump() + "\n";
    }
    write_file(dir / "responses.tmp", out);
    std::filesystem::rename(dir / "responses.tmp", dir / "responses.jsonl");
  });
  auto spec = fast(parse_adapter_spec("file:" + dir.path().string()));
  spec.max_attempts = 10;
  const auto outcome = run_suite(cases, spec);
  responder.join();
  ASSERT_EQ(outcome.predictions.size(), 5u);
  for (std::size_t i = 0; i < cases.size(); ++i) EXPECT_EQ(outcome.predictions[i].label, cases[i].gold);
  EXPECT_EQ(read_file(dir / "requests.jsonl"), serialize_requests(cases));
}

TEST(RunSuite, FileBatchTimesOut) {
  support::TempDir dir;
  auto spec = fast(parse_adapter_spec("file:" + dir.path().string()));
  spec.max_attempts = 2;
  EXPECT_THROW(run_suite(small_cases(2), spec), AdapterError);
  EXPECT_TRUE(std::filesystem::exists(dir / "requests.jsonl"));
}

TEST(RunSuite, FileBatchGapsAndDuplicates) {
  const auto cases = small_cases(3);
  const auto run_with = [&](const std::string& body) {
    support::TempDir dir;
    std::thread responder([&] {
      wait_for_requests(dir.path(), cases.size());
      write_file(dir / "responses.jsonl", body);
    });
    auto spec = fast(parse_adapter_spec("file:" + dir.path().string()));
    spec.max_attempts = 10;
    try {
      run_suite(cases, spec);
    } catch (...) {
      responder.join();
      throw;
    }
    responder.join();
  };
  const std::string a = "{\"case_id\":\"t#0000\",\"label\":\"no_ade\"}\n";
  const std::string b = "{\"case_id\":\"t#0001\",\"label\":\"ade\"}\n";
  try {
    run_with(a + b);
    FAIL() << "expected CoverageError";
  } catch (const CoverageError& e) {
    EXPECT_EQ(e.missing(), std::vector<std::string>{"t#0002"});
  }
  EXPECT_THROW(run_with(a + b + a), AdapterError);
  EXPECT_THROW(run_with("{\"case_id\":\"other\",\"label\":\"ade\"}\n"), AdapterError);
  EXPECT_THROW(run_with("garbage\n"), AdapterError);
}
