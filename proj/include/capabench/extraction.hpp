#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/types.hpp"

namespace capabench {

// Coarse tagset. Universal POS tags outside this list (ADV, AUX, CCONJ, INTJ, PART,
// SCONJ, X, SPACE) are read as kOther.
enum class PosTag : std::uint8_t { kNoun, kPropn, kAdj, kDet, kAdp, kPron, kVerb, kNum, kPunct, kSym, kOther };

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view text);

struct TaggedToken {
  std::string surface;
  PosTag tag = PosTag::kOther;
};

struct TaggedSpan {
  std::vector<TaggedToken> tokens;

  /// Token surfaces joined by single spaces.
  std::string surface() const;
};

inline constexpr std::size_t kMaxRuleLength = 7;

class TagSetRule {
 public:
  /// Throws Error unless 1 <= pattern.size() <= kMaxRuleLength.
  explicit TagSetRule(std::vector<PosTag> pattern);

  const std::vector<PosTag>& pattern() const { return pattern_; }
  bool matches(const TaggedSpan& span) const;

 private:
  std::vector<PosTag> pattern_;
};

enum class RejectionReason { kNotNounPhrase, kTooLong, kPunctuation };

std::string_view to_string(RejectionReason reason);

struct Rejection {
  std::size_t span_index;
  std::string surface;
  RejectionReason reason;
};

struct ExtractionResult {
  std::vector<std::string> accepted;  // deduplicated, input order
  std::vector<Rejection> rejected;
};

/// Keeps spans whose whole tag sequence equals some rule. Spans holding PUNCT/SYM are
/// rejected first; spans longer than min(max_len, longest rule) are too long.
/// Throws Error when `rules` is empty or `max_len` is zero.
ExtractionResult extract_short_noun_phrases(std::span<const TaggedSpan> spans, std::span<const TagSetRule> rules,
                                            std::size_t max_len = kMaxRuleLength);

/// [NOUN], [ADJ NOUN], [NOUN ADP NOUN], [NOUN ADP ADJ NOUN], [ADJ NOUN ADP PRON ADJ NOUN]
std::vector<TagSetRule> default_tagsets();

/// One span per line, tokens as `surface_TAG` split at the last underscore.
std::vector<TaggedSpan> parse_tagged_spans(std::string_view source);
/// One rule per line, tags separated by spaces; `#` comments allowed.
std::vector<TagSetRule> parse_tagsets(std::string_view source);
std::string serialize_tagsets(std::span<const TagSetRule> rules);

}  // namespace capabench
