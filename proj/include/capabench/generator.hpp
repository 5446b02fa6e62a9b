#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "capabench/lexicon.hpp"
#include "capabench/template_corpus.hpp"
#include "capabench/types.hpp"

namespace capabench {

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Seeded sampler over mt19937_64. Its draw sequence is a compatibility contract:
///  - below(n) rejects raw outputs smaller than 2^64 mod n and returns raw mod n;
///  - sample(n, k) is a partial Fisher-Yates shuffle of [0, n) (position i swapped with
///    i + below(n - i)) whose first k indices are returned in ascending (document) order;
///  - streams are derived from the user seed with splitmix64(seed + stream).
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  static Sampler for_stream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t below(std::uint64_t bound);
  std::vector<std::size_t> sample(std::size_t population, std::size_t count);
  /// Full Fisher-Yates permutation of [0, n), in shuffled order.
  std::vector<std::size_t> permutation(std::size_t population);

 private:
  std::mt19937_64 engine_;
};

inline constexpr std::uint64_t kEntityStream = 0;
inline constexpr std::uint64_t kVariationStream = 1;
inline constexpr std::uint64_t kDefaultSeed = 2023;

enum class PairSampling {
  kPairs,      // sample n pairs from every strictly ordered pair of the time pool
  kDurations,  // shuffle the time pool and pair consecutive durations, skipping ties
};

struct SamplingConfig {
  std::size_t n_ades = 15;
  std::size_t n_mild_ades = 15;
  std::size_t n_drugs = 5;
  std::size_t n_single_time = 7;
  std::size_t n_relational_pairs = 7;
  bool one_variation_per_base = true;
  std::uint64_t seed = kDefaultSeed;
  PairSampling pair_sampling = PairSampling::kPairs;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

/// Reads a JSON config; absent keys keep their defaults.
SamplingConfig parse_sampling_config(std::string_view source, SamplingConfig base = {});
std::string serialize_sampling_config(const SamplingConfig& config);

/// Entity pools after sampling, in lexicon document order.
struct EntitySelection {
  std::vector<std::string> drugs;
  std::vector<std::string> ades;
  std::vector<std::string> mild_ades;
  std::vector<Duration> time_entities;
  std::vector<RelationalPair> relational_pairs;
};

EntitySelection sample_entities(const Lexicon& lexicon, const SamplingConfig& config);

/// One template per base for temporal order, positive sentiment and negation (when
/// `one_variation_per_base`); every beneficial-effect template is kept. Output keeps corpus order.
std::vector<Template> select_variations(std::span<const Template> corpus, const SamplingConfig& config);

/// Placeholder name -> entity, in order of first appearance in the template text.
using Fills = std::vector<std::pair<std::string, std::string>>;

struct TestCase {
  std::string case_id;
  std::string template_id;
  Capability capability;
  Label gold = Label::kNoAde;
  std::string text;
  Fills fills;

  TestKey key() const { return {capability, gold}; }
};

/// Substitutes fills into the template. A space is inserted between an entity and an
/// adjacent letter or digit the template author left unseparated.
std::string render_template(const Template& t, const Fills& fills);

/// Full cross product over the template's distinct placeholders; the large/small time
/// entities are drawn jointly from the relational pairs. Case ids are `<template id>#<nnnn>`.
std::vector<TestCase> expand(const Template& t, const EntitySelection& selection);

/// Number of cases expand() yields for `t`.
std::size_t expected_case_count(const Template& t, const EntitySelection& selection);

struct Suite {
  std::vector<TestCase> cases;  // sorted by case_id
  SamplingConfig config;
  std::string fingerprint;  // SHA-256 of the canonical corpus and lexicon documents
};

struct SuiteOptions {
  std::optional<CapabilityKind> capability;  // keep only this capability
  bool allow_drugless = false;
};

/// Validates corpus structure, samples, expands. Throws GenerationError.
Suite build_suite(std::span<const Template> corpus, const Lexicon& lexicon, const SamplingConfig& config,
                  const SuiteOptions& options = {});

std::string fingerprint(std::span<const Template> corpus, const Lexicon& lexicon);

/// Line-delimited `{case_id, template_id, capability, variant, label, text, fills}`.
std::string serialize_suite(const Suite& suite);
/// Reads a suite file. Config and fingerprint are not part of the file and stay default.
Suite parse_suite(std::string_view source);

std::map<TestKey, std::size_t> count_by_test(std::span<const TestCase> cases);
std::map<Label, std::size_t> count_by_label(std::span<const TestCase> cases);

/// Per-test case counts of the published run (11,265 cases).
std::map<TestKey, std::size_t> reference_test_counts();
/// Differences between `counts` and reference_test_counts(); empty when they agree.
std::vector<std::string> reference_count_diagnostics(const std::map<TestKey, std::size_t>& counts);

/// Mean whitespace token count of rendered cases, per gold label.
std::map<Label, double> mean_token_lengths(std::span<const TestCase> cases);

}  // namespace capabench
