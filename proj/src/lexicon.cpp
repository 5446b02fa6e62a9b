#include "capabench/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "json.hpp"

namespace capabench {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSingularUnits[] = {"day", "week", "month"};
constexpr std::string_view kPluralUnits[] = {"days", "weeks", "months"};

std::optional<TimeUnit> parse_unit(std::string_view word) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (word == kSingularUnits[i] || word == kPluralUnits[i]) return static_cast<TimeUnit>(i);
  }
  return std::nullopt;
}

std::vector<std::string> read_string_list(const ordered_json& doc, std::string_view name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(0, fmt::format("lexicon: missing required list '{}'", name));
  if (!it->is_array()) throw ParseError(0, fmt::format("lexicon: '{}' must be a list", name));
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& entry : *it) {
    if (!entry.is_string()) throw ParseError(0, fmt::format("lexicon: '{}' entries must be strings", name));
    auto value = entry.get<std::string>();
    if (value.empty()) throw ParseError(0, fmt::format("lexicon: empty entry in '{}'", name));
    if (!seen.insert(value).second) {
      throw ParseError(0, fmt::format("lexicon: duplicate entry \"{}\" in '{}'", value, name));
    }
    out.push_back(std::move(value));
  }
  return out;
}

Duration read_duration(const ordered_json& node) {
  if (!node.is_object() || !node.contains("magnitude") || !node.contains("unit")) {
    throw ParseError(0, "lexicon: malformed duration, expected {magnitude, unit}");
  }
  const auto& magnitude = node["magnitude"];
  const auto& unit = node["unit"];
  if (!magnitude.is_number_integer() || !unit.is_string()) {
    throw ParseError(0, "lexicon: malformed duration, magnitude must be an integer and unit a string");
  }
  const auto m = magnitude.get<long long>();
  if (m < kMinMagnitude || m > kMaxMagnitude) {
    throw ParseError(0, fmt::format("lexicon: duration magnitude {} out of range [{}, {}]", m, kMinMagnitude,
                                    kMaxMagnitude));
  }
  const auto u = parse_unit(unit.get<std::string>());
  if (!u) throw ParseError(0, fmt::format("lexicon: unknown duration unit \"{}\"", unit.get<std::string>()));
  return {static_cast<int>(m), *u};
}

}  // namespace

std::string_view unit_word(TimeUnit unit) { return kPluralUnits[static_cast<std::size_t>(unit)]; }

std::string render(const Duration& d) {
  const auto i = static_cast<std::size_t>(d.unit);
  return fmt::format("{} {}", d.magnitude, d.magnitude == 1 ? kSingularUnits[i] : kPluralUnits[i]);
}

Duration parse_duration(std::string_view text) {
  const auto space = text.find(' ');
  if (space == std::string_view::npos) throw ParseError(0, fmt::format("malformed duration \"{}\"", text));
  int magnitude = 0;
  const auto digits = text.substr(0, space);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), magnitude);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw ParseError(0, fmt::format("malformed duration \"{}\"", text));
  }
  if (magnitude < kMinMagnitude || magnitude > kMaxMagnitude) {
    throw ParseError(0, fmt::format("duration magnitude {} out of range [{}, {}]", magnitude, kMinMagnitude,
                                    kMaxMagnitude));
  }
  const auto unit = parse_unit(text.substr(space + 1));
  if (!unit) throw ParseError(0, fmt::format("malformed duration \"{}\"", text));
  return {magnitude, *unit};
}

int canonical_days(const Duration& d) {
  switch (d.unit) {
    case TimeUnit::kDays: return d.magnitude;
    case TimeUnit::kWeeks: return 7 * d.magnitude;
    case TimeUnit::kMonths: return 30 * d.magnitude;
  }
  return d.magnitude;
}

Lexicon load_lexicon(std::string_view source) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(source);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(0, fmt::format("lexicon syntax error: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError(0, "lexicon must be an object");

  Lexicon lexicon;
  lexicon.drugs = read_string_list(doc, "drugs");
  lexicon.ades = read_string_list(doc, "ades");
  lexicon.mild_ades = read_string_list(doc, "mild_ades");
  lexicon.beneficial_effects = read_string_list(doc, "beneficial_effects");

  const auto it = doc.find("time_entities");
  if (it == doc.end()) throw ParseError(0, "lexicon: missing required list 'time_entities'");
  if (!it->is_array()) throw ParseError(0, "lexicon: 'time_entities' must be a list");
  for (const auto& node : *it) {
    const auto d = read_duration(node);
    if (std::find(lexicon.time_entities.begin(), lexicon.time_entities.end(), d) != lexicon.time_entities.end()) {
      throw ParseError(0, fmt::format("lexicon: duplicate time entity \"{}\"", render(d)));
    }
    lexicon.time_entities.push_back(d);
  }
  try {
    lexicon.relational_pairs = generate_relational_pairs(lexicon.time_entities);
  } catch (const LexiconError&) {
    // generation rejects a lexicon without pairs only if a template needs them
  }
  return lexicon;
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  ordered_json doc;
  doc["drugs"] = lexicon.drugs;
  doc["ades"] = lexicon.ades;
  doc["mild_ades"] = lexicon.mild_ades;
  doc["beneficial_effects"] = lexicon.beneficial_effects;
  doc["time_entities"] = ordered_json::array();
  for (const auto& d : lexicon.time_entities) {
    ordered_json node;
    node["magnitude"] = d.magnitude;
    node["unit"] = unit_word(d.unit);
    doc["time_entities"].push_back(std::move(node));
  }
  return doc.dump(2) + "\n";
}

std::vector<Duration> generate_time_entities(int min_magnitude, int max_magnitude, std::span<const TimeUnit> units) {
  if (min_magnitude > max_magnitude) throw LexiconError("empty magnitude range");
  if (min_magnitude < kMinMagnitude || max_magnitude > kMaxMagnitude) {
    throw LexiconError(fmt::format("magnitude range [{}, {}] exceeds [{}, {}]", min_magnitude, max_magnitude,
                                   kMinMagnitude, kMaxMagnitude));
  }
  if (units.empty()) throw LexiconError("empty unit set");

  std::set<TimeUnit> ordered(units.begin(), units.end());
  std::vector<Duration> out;
  for (const auto unit : ordered) {
    for (int m = min_magnitude; m <= max_magnitude; ++m) out.push_back({m, unit});
  }
  return out;
}

std::vector<RelationalPair> generate_relational_pairs(std::span<const Duration> pool) {
  if (pool.empty()) throw LexiconError("empty duration pool");
  std::vector<RelationalPair> pairs;
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      if (canonical_days(a) > canonical_days(b)) pairs.push_back({a, b});
    }
  }
  if (pairs.empty()) throw LexiconError("duration pool yields no strictly ordered pair");
  return pairs;
}

}  // namespace capabench
