#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/types.hpp"

namespace capabench {

enum class TimeUnit : std::uint8_t { kDays, kWeeks, kMonths };

inline constexpr int kMinMagnitude = 1;
inline constexpr int kMaxMagnitude = 25;

struct Duration {
  int magnitude = 1;  // in [1, 25]
  TimeUnit unit = TimeUnit::kDays;

  friend bool operator==(const Duration&, const Duration&) = default;
};

/// "1 day", "2 days", "1 week", "3 months".
std::string render(const Duration& d);
/// Inverse of render; also accepts the plural form at magnitude 1. Throws ParseError.
Duration parse_duration(std::string_view text);

/// Days with week = 7 and month = 30.
int canonical_days(const Duration& d);

std::string_view unit_word(TimeUnit unit);  // plural wire form: "days", "weeks", "months"

/// Two durations with canonical_days(large) > canonical_days(small).
struct RelationalPair {
  Duration large;
  Duration small;

  friend bool operator==(const RelationalPair&, const RelationalPair&) = default;
};

struct Lexicon {
  std::vector<std::string> drugs;
  std::vector<std::string> ades;
  std::vector<std::string> mild_ades;
  std::vector<std::string> beneficial_effects;
  std::vector<Duration> time_entities;
  std::vector<RelationalPair> relational_pairs;  // derived from time_entities
};

class LexiconError : public Error {
 public:
  using Error::Error;
};

/// Loads the lexicon document. Throws ParseError on missing lists, duplicates or
/// malformed durations.
Lexicon load_lexicon(std::string_view source);
/// Canonical form: fixed key order, two-space indentation, trailing newline.
std::string serialize_lexicon(const Lexicon& lexicon);

/// Cross product of [min_magnitude, max_magnitude] x units, ordered by (unit, magnitude).
/// Throws LexiconError on an empty or out-of-range request.
std::vector<Duration> generate_time_entities(int min_magnitude, int max_magnitude, std::span<const TimeUnit> units);

/// Every ordered pair (a, b) of the pool with canonical_days(a) > canonical_days(b), ties
/// excluded, in pool order of a then b. Throws LexiconError when no pair qualifies.
std::vector<RelationalPair> generate_relational_pairs(std::span<const Duration> pool);

}  // namespace capabench
