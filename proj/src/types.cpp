#include "capabench/types.hpp"

#include <array>
#include <cctype>
#include <utility>

#include <fmt/format.h>

namespace capabench {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<std::string_view, Enum>, N>& table, std::string_view text) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, Label>, 2> kLabelNames{{
    {"ade", Label::kAde},
    {"no_ade", Label::kNoAde},
}};

constexpr std::array<std::pair<std::string_view, CapabilityKind>, 4> kCapabilityNames{{
    {"temporal_order", CapabilityKind::kTemporalOrder},
    {"positive_sentiment", CapabilityKind::kPositiveSentiment},
    {"beneficial_effect", CapabilityKind::kBeneficialEffect},
    {"negation", CapabilityKind::kNegation},
}};

constexpr std::array<std::pair<std::string_view, Variant>, 4> kVariantNames{{
    {"standard", Variant::kStandard},
    {"single_time", Variant::kSingleTime},
    {"double_time", Variant::kDoubleTime},
    {"none", Variant::kNone},
}};

constexpr std::array<std::pair<std::string_view, PlaceholderKind>, 6> kPlaceholderNames{{
    {"drug", PlaceholderKind::kDrug},
    {"ade", PlaceholderKind::kAde},
    {"mild_ade", PlaceholderKind::kMildAde},
    {"time_entity", PlaceholderKind::kTimeEntity},
    {"time_entity_small", PlaceholderKind::kTimeEntitySmall},
    {"time_entity_large", PlaceholderKind::kTimeEntityLarge},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, Enum>, N>& table, Enum value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(line == 0 ? message : fmt::format("line {}: {}", line, message)), line_(line) {}

std::string_view to_string(Label label) { return name_of(kLabelNames, label); }
std::string_view to_string(CapabilityKind kind) { return name_of(kCapabilityNames, kind); }
std::string_view to_string(Variant variant) { return name_of(kVariantNames, variant); }
std::string_view to_string(PlaceholderKind kind) { return name_of(kPlaceholderNames, kind); }

std::optional<Label> parse_label(std::string_view text) { return lookup(kLabelNames, text); }
std::optional<CapabilityKind> parse_capability_kind(std::string_view text) { return lookup(kCapabilityNames, text); }
std::optional<Variant> parse_variant(std::string_view text) { return lookup(kVariantNames, text); }
std::optional<PlaceholderKind> parse_placeholder_kind(std::string_view text) {
  return lookup(kPlaceholderNames, text);
}

Label flipped(Label label) { return label == Label::kAde ? Label::kNoAde : Label::kAde; }

std::string display_name(const Capability& capability) {
  if (capability.variant == Variant::kNone) return std::string(to_string(capability.kind));
  return fmt::format("{}/{}", to_string(capability.kind), to_string(capability.variant));
}

std::string display_name(const TestKey& key) {
  return fmt::format("{} {}", display_name(key.capability), to_string(key.label));
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

}  // namespace capabench
