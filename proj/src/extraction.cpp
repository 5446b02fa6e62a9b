#include "capabench/extraction.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>

#include "capabench/io.hpp"

namespace capabench {

namespace {

constexpr std::array<std::pair<std::string_view, PosTag>, 11> kTagNames{{
    {"NOUN", PosTag::kNoun},
    {"PROPN", PosTag::kPropn},
    {"ADJ", PosTag::kAdj},
    {"DET", PosTag::kDet},
    {"ADP", PosTag::kAdp},
    {"PRON", PosTag::kPron},
    {"VERB", PosTag::kVerb},
    {"NUM", PosTag::kNum},
    {"PUNCT", PosTag::kPunct},
    {"SYM", PosTag::kSym},
    {"OTHER", PosTag::kOther},
}};

constexpr std::array<std::string_view, 8> kFoldedToOther{"ADV", "AUX", "CCONJ", "INTJ", "PART", "SCONJ", "X", "SPACE"};

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

}  // namespace

std::string_view to_string(PosTag tag) {
  for (const auto& [name, value] : kTagNames) {
    if (value == tag) return name;
  }
  return "OTHER";
}

std::optional<PosTag> parse_pos_tag(std::string_view text) {
  for (const auto& [name, value] : kTagNames) {
    if (name == text) return value;
  }
  if (std::find(kFoldedToOther.begin(), kFoldedToOther.end(), text) != kFoldedToOther.end()) return PosTag::kOther;
  return std::nullopt;
}

std::string TaggedSpan::surface() const {
  std::string out;
  for (const auto& token : tokens) {
    if (!out.empty()) out += ' ';
    out += token.surface;
  }
  return out;
}

TagSetRule::TagSetRule(std::vector<PosTag> pattern) : pattern_(std::move(pattern)) {
  if (pattern_.empty() || pattern_.size() > kMaxRuleLength) {
    throw Error(fmt::format("tagset rule length {} outside [1, {}]", pattern_.size(), kMaxRuleLength));
  }
}

bool TagSetRule::matches(const TaggedSpan& span) const {
  return std::equal(pattern_.begin(), pattern_.end(), span.tokens.begin(), span.tokens.end(),
                    [](PosTag want, const TaggedToken& token) { return want == token.tag; });
}

std::string_view to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::kNotNounPhrase: return "not-NP";
    case RejectionReason::kTooLong: return "too-long";
    case RejectionReason::kPunctuation: return "punct/sym";
  }
  return "?";
}

ExtractionResult extract_short_noun_phrases(std::span<const TaggedSpan> spans, std::span<const TagSetRule> rules,
                                            std::size_t max_len) {
  if (rules.empty()) throw Error("extraction needs at least one tagset rule");
  if (max_len == 0) throw Error("max_len must be at least 1");

  std::size_t longest_rule = 0;
  for (const auto& rule : rules) longest_rule = std::max(longest_rule, rule.pattern().size());
  // nothing longer than every rule can match, so it is reported as too long
  const std::size_t limit = std::min(max_len, longest_rule);

  ExtractionResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& span = spans[i];
    auto surface = span.surface();
    const bool has_punct = std::any_of(span.tokens.begin(), span.tokens.end(), [](const TaggedToken& t) {
      return t.tag == PosTag::kPunct || t.tag == PosTag::kSym;
    });
    if (has_punct) {
      result.rejected.push_back({i, std::move(surface), RejectionReason::kPunctuation});
      continue;
    }
    if (span.tokens.empty() || span.tokens.size() > limit) {
      result.rejected.push_back({i, std::move(surface), RejectionReason::kTooLong});
      continue;
    }
    const bool matched =
        std::any_of(rules.begin(), rules.end(), [&](const TagSetRule& rule) { return rule.matches(span); });
    if (!matched) {
      result.rejected.push_back({i, std::move(surface), RejectionReason::kNotNounPhrase});
      continue;
    }
    if (seen.insert(surface).second) result.accepted.push_back(std::move(surface));
  }
  return result;
}

std::vector<TagSetRule> default_tagsets() {
  using enum PosTag;
  return {
      TagSetRule({kNoun}),
      TagSetRule({kAdj, kNoun}),
      TagSetRule({kNoun, kAdp, kNoun}),
      TagSetRule({kNoun, kAdp, kAdj, kNoun}),
      TagSetRule({kAdj, kNoun, kAdp, kPron, kAdj, kNoun}),
  };
}

std::vector<TaggedSpan> parse_tagged_spans(std::string_view source) {
  std::vector<TaggedSpan> spans;
  for (const auto& [number, line] : record_lines(source, /*skip_comments=*/false)) {
    TaggedSpan span;
    for (const auto item : split_spaces(line)) {
      const auto sep = item.rfind('_');
      if (sep == std::string_view::npos || sep == 0 || sep + 1 == item.size()) {
        throw ParseError(number, fmt::format("token \"{}\" is not of the form surface_TAG", item));
      }
      const auto tag = parse_pos_tag(item.substr(sep + 1));
      if (!tag) throw ParseError(number, fmt::format("unknown POS tag \"{}\"", item.substr(sep + 1)));
      span.tokens.push_back({std::string(item.substr(0, sep)), *tag});
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<TagSetRule> parse_tagsets(std::string_view source) {
  std::vector<TagSetRule> rules;
  for (const auto& [number, line] : record_lines(source, /*skip_comments=*/true)) {
    std::vector<PosTag> pattern;
    for (const auto word : split_spaces(line)) {
      const auto tag = parse_pos_tag(word);
      if (!tag) throw ParseError(number, fmt::format("unknown POS tag \"{}\"", word));
      pattern.push_back(*tag);
    }
    try {
      rules.emplace_back(std::move(pattern));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(number, e.what());
    }
  }
  return rules;
}

std::string serialize_tagsets(std::span<const TagSetRule> rules) {
  std::string out;
  for (const auto& rule : rules) {
    for (std::size_t i = 0; i < rule.pattern().size(); ++i) {
      if (i > 0) out += ' ';
      out += to_string(rule.pattern()[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace capabench
