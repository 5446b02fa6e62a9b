#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "capabench/types.hpp"

namespace capabench {

struct Template {
  std::string id;
  std::string base_id;  // equals id for a base template
  Capability capability;
  Label label = Label::kAde;
  std::string text;
  std::vector<PlaceholderKind> placeholders;  // in order of appearance

  bool is_base() const { return id == base_id; }
};

/// One piece of template text: either literal text or a placeholder.
struct TemplatePiece {
  std::variant<std::string, PlaceholderKind> value;
  std::size_t offset = 0;  // byte offset into the template text

  bool is_placeholder() const { return std::holds_alternative<PlaceholderKind>(value); }
};

/// Splits `{name}` placeholders out of template text. Throws ParseError (line 0)
/// on unmatched braces or unknown placeholder names.
std::vector<TemplatePiece> split_template(std::string_view text);
std::vector<PlaceholderKind> extract_placeholders(std::string_view text);

/// Parses a line-delimited template corpus. Errors carry the 1-based line number.
std::vector<Template> parse_corpus(std::string_view source);
std::string serialize_corpus(std::span<const Template> templates);

struct TemplateCount {
  std::size_t base = 0;
  std::size_t total = 0;

  friend bool operator==(const TemplateCount&, const TemplateCount&) = default;
};

struct CorpusManifest {
  std::map<CapabilityKind, TemplateCount> per_capability;

  TemplateCount totals() const;
};

/// The published inventory: 36/816, 36/504, 12/48, 15/137 (99/1505 overall).
CorpusManifest reference_manifest();
CorpusManifest count_templates(std::span<const Template> templates);
/// `{"per_capability": {name: {"base": n, "total": n}}, "totals": {...}}`; totals optional but
/// must equal the per-capability sum when present.
CorpusManifest parse_manifest(std::string_view source);

enum class ViolationKind {
  kPlaceholderCapabilityMismatch,
  kMissingPlaceholder,
  kMissingDrug,
  kIllegalLabel,
  kIllegalVariant,
  kDuplicateId,
  kDanglingBase,
  kBaseMismatch,
  kCountMismatch,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string template_id;  // empty for corpus-level violations
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  CorpusManifest counts;

  bool ok() const { return violations.empty(); }
};

struct ValidationOptions {
  bool allow_drugless = false;
};

ValidationReport validate_corpus(std::span<const Template> templates,
                                 const std::optional<CorpusManifest>& expected = std::nullopt,
                                 const ValidationOptions& options = {});

struct Substitution {
  std::string target;
  std::string replacement;  // empty removes the target
};

/// Vocabulary rules swap words or phrases (temporal order, negation, beneficial effect);
/// conjunction rules exchange or remove the conjunction between two phrases (positive sentiment).
struct VariationRule {
  enum class Kind { kVocabulary, kConjunction };

  Kind kind = Kind::kVocabulary;
  std::vector<Substitution> substitutions;  // none = identity
};

class VariationError : public Error {
 public:
  using Error::Error;
};

/// `<base id>-v<nn>`
std::string variation_id(std::string_view base_id, std::size_t number);

/// Applies every substitution to the first whole-phrase occurrence of its target in the
/// literal text of `base`. Throws VariationError when a target is absent, targets overlap,
/// the rule kind does not fit the capability, or the placeholder multiset would change.
Template apply_variation(const Template& base, const VariationRule& rule, std::size_t variation_number);

}  // namespace capabench
