#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace capabench {

enum class Label : std::uint8_t { kNoAde, kAde };

enum class CapabilityKind : std::uint8_t {
  kTemporalOrder,
  kPositiveSentiment,
  kBeneficialEffect,
  kNegation,
};

enum class Variant : std::uint8_t { kStandard, kSingleTime, kDoubleTime, kNone };

enum class PlaceholderKind : std::uint8_t {
  kDrug,
  kAde,
  kMildAde,
  kTimeEntity,
  kTimeEntitySmall,
  kTimeEntityLarge,
};

inline constexpr CapabilityKind kAllCapabilities[] = {
    CapabilityKind::kTemporalOrder, CapabilityKind::kPositiveSentiment,
    CapabilityKind::kBeneficialEffect, CapabilityKind::kNegation};

inline constexpr PlaceholderKind kAllPlaceholderKinds[] = {
    PlaceholderKind::kDrug,           PlaceholderKind::kAde,
    PlaceholderKind::kMildAde,        PlaceholderKind::kTimeEntity,
    PlaceholderKind::kTimeEntitySmall, PlaceholderKind::kTimeEntityLarge};

struct Capability {
  CapabilityKind kind = CapabilityKind::kTemporalOrder;
  Variant variant = Variant::kStandard;

  friend auto operator<=>(const Capability&, const Capability&) = default;
};

/// One capability test: every case of a test shares capability, variant and gold label.
/// Ordering is the canonical report order (capability, variant, label).
struct TestKey {
  Capability capability;
  Label label = Label::kNoAde;

  friend auto operator<=>(const TestKey&, const TestKey&) = default;
};

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `line` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Wire names, as they appear in every file format.
std::string_view to_string(Label label);
std::string_view to_string(CapabilityKind kind);
std::string_view to_string(Variant variant);
std::string_view to_string(PlaceholderKind kind);

std::optional<Label> parse_label(std::string_view text);
std::optional<CapabilityKind> parse_capability_kind(std::string_view text);
std::optional<Variant> parse_variant(std::string_view text);
std::optional<PlaceholderKind> parse_placeholder_kind(std::string_view text);

Label flipped(Label label);

/// "temporal_order/single_time", or just "negation" when the variant is none.
std::string display_name(const Capability& capability);
/// display_name plus the label, e.g. "negation ade".
std::string display_name(const TestKey& key);

/// Exact pass ratio. Comparisons go through the integer counts.
struct Ratio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  double value() const {
    return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const Ratio& a, const Ratio& b) {
    if (a.denominator == 0 || b.denominator == 0) return a.denominator == b.denominator;
    // cross-multiplication; both sides are small counts
    return a.numerator * b.denominator == b.numerator * a.denominator;
  }
};

/// Whitespace-split token count.
std::size_t count_tokens(std::string_view text);

}  // namespace capabench
