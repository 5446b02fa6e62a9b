#include "capabench/template_corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include "json.hpp"

#include "capabench/io.hpp"

namespace capabench {

using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 6> kCorpusFields{"id", "base_id", "capability", "variant", "label", "text"};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string field_string(const ordered_json& record, std::string_view name, std::size_t line) {
  const auto it = record.find(name);
  if (it == record.end()) throw ParseError(line, fmt::format("missing field '{}'", name));
  if (!it->is_string()) throw ParseError(line, fmt::format("field '{}' must be a string", name));
  return it->get<std::string>();
}

std::multiset<PlaceholderKind> as_multiset(const std::vector<PlaceholderKind>& kinds) {
  return {kinds.begin(), kinds.end()};
}

bool contains(const std::vector<PlaceholderKind>& kinds, PlaceholderKind kind) {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

void check_placeholders(const Template& t, const ValidationOptions& options, std::vector<Violation>& out) {
  const auto kind = t.capability.kind;
  const auto variant = t.capability.variant;
  const auto mismatch = [&](PlaceholderKind p) {
    out.push_back({ViolationKind::kPlaceholderCapabilityMismatch, t.id,
                   fmt::format("placeholder/capability mismatch: {{{}}} is not allowed in {}", to_string(p),
                               display_name(t.capability))});
  };
  const auto missing = [&](PlaceholderKind p) {
    out.push_back({ViolationKind::kMissingPlaceholder, t.id,
                   fmt::format("{} requires a {{{}}} placeholder", display_name(t.capability), to_string(p))});
  };

  for (const auto p : std::set<PlaceholderKind>(t.placeholders.begin(), t.placeholders.end())) {
    bool allowed = true;
    switch (p) {
      case PlaceholderKind::kDrug:
        break;
      case PlaceholderKind::kAde:
        allowed = kind == CapabilityKind::kTemporalOrder || kind == CapabilityKind::kNegation ||
                  kind == CapabilityKind::kPositiveSentiment;
        break;
      case PlaceholderKind::kMildAde:
        allowed = kind == CapabilityKind::kPositiveSentiment;
        break;
      case PlaceholderKind::kTimeEntity:
        allowed = kind == CapabilityKind::kTemporalOrder && variant == Variant::kSingleTime;
        break;
      case PlaceholderKind::kTimeEntitySmall:
      case PlaceholderKind::kTimeEntityLarge:
        allowed = kind == CapabilityKind::kTemporalOrder && variant == Variant::kDoubleTime;
        break;
    }
    if (!allowed) mismatch(p);
  }

  if (!options.allow_drugless && !contains(t.placeholders, PlaceholderKind::kDrug)) {
    out.push_back({ViolationKind::kMissingDrug, t.id, "template has no {drug} placeholder"});
  }
  switch (kind) {
    case CapabilityKind::kTemporalOrder:
    case CapabilityKind::kNegation:
      if (!contains(t.placeholders, PlaceholderKind::kAde)) missing(PlaceholderKind::kAde);
      break;
    case CapabilityKind::kPositiveSentiment:
      if (!contains(t.placeholders, PlaceholderKind::kMildAde) && !contains(t.placeholders, PlaceholderKind::kAde)) {
        missing(PlaceholderKind::kMildAde);
      }
      break;
    case CapabilityKind::kBeneficialEffect:
      break;
  }
  if (kind == CapabilityKind::kTemporalOrder) {
    if (variant == Variant::kSingleTime && !contains(t.placeholders, PlaceholderKind::kTimeEntity)) {
      missing(PlaceholderKind::kTimeEntity);
    }
    if (variant == Variant::kDoubleTime) {
      if (!contains(t.placeholders, PlaceholderKind::kTimeEntitySmall)) missing(PlaceholderKind::kTimeEntitySmall);
      if (!contains(t.placeholders, PlaceholderKind::kTimeEntityLarge)) missing(PlaceholderKind::kTimeEntityLarge);
    }
  }
}

}  // namespace

std::vector<TemplatePiece> split_template(std::string_view text) {
  std::vector<TemplatePiece> pieces;
  std::string literal;
  std::size_t literal_start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '}') throw ParseError(0, fmt::format("unmatched '}}' at offset {}", i));
    if (c != '{') {
      if (literal.empty()) literal_start = i;
      literal += c;
      ++i;
      continue;
    }
    const std::size_t close = text.find_first_of("{}", i + 1);
    if (close == std::string_view::npos || text[close] != '}') {
      throw ParseError(0, fmt::format("unmatched '{{' at offset {}", i));
    }
    const std::string_view name = text.substr(i + 1, close - i - 1);
    const auto kind = parse_placeholder_kind(name);
    if (!kind) throw ParseError(0, fmt::format("unknown placeholder name \"{}\"", name));
    if (!literal.empty()) pieces.push_back({std::move(literal), literal_start});
    literal.clear();
    pieces.push_back({*kind, i});
    i = close + 1;
  }
  if (!literal.empty()) pieces.push_back({std::move(literal), literal_start});
  return pieces;
}

std::vector<PlaceholderKind> extract_placeholders(std::string_view text) {
  std::vector<PlaceholderKind> kinds;
  for (const auto& piece : split_template(text)) {
    if (piece.is_placeholder()) kinds.push_back(std::get<PlaceholderKind>(piece.value));
  }
  return kinds;
}

std::vector<Template> parse_corpus(std::string_view source) {
  std::vector<Template> templates;
  std::vector<std::size_t> line_of;
  std::unordered_map<std::string, std::size_t> index;

  for (const auto& [number, text] : record_lines(source, /*skip_comments=*/true)) {
    ordered_json record;
    try {
      record = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError(number, fmt::format("syntax error: {}", e.what()));
    }
    if (!record.is_object()) throw ParseError(number, "syntax error: record is not an object");
    for (const auto& [key, value] : record.items()) {
      if (std::find(kCorpusFields.begin(), kCorpusFields.end(), key) == kCorpusFields.end()) {
        throw ParseError(number, fmt::format("syntax error: unexpected field '{}'", key));
      }
    }

    Template t;
    t.id = field_string(record, "id", number);
    t.base_id = field_string(record, "base_id", number);
    const auto capability = field_string(record, "capability", number);
    const auto variant = field_string(record, "variant", number);
    const auto label = field_string(record, "label", number);
    t.text = field_string(record, "text", number);

    const auto kind = parse_capability_kind(capability);
    if (!kind) throw ParseError(number, fmt::format("unknown capability '{}'", capability));
    const auto var = parse_variant(variant);
    if (!var) throw ParseError(number, fmt::format("unknown variant '{}'", variant));
    const auto lab = parse_label(label);
    if (!lab) throw ParseError(number, fmt::format("unknown label '{}'", label));
    t.capability = {*kind, *var};
    t.label = *lab;
    if (t.id.empty()) throw ParseError(number, "empty template id");

    try {
      t.placeholders = extract_placeholders(t.text);
    } catch (const ParseError& e) {
      throw ParseError(number, e.what());
    }

    if (!index.emplace(t.id, templates.size()).second) {
      throw ParseError(number, fmt::format("duplicate template id '{}'", t.id));
    }
    templates.push_back(std::move(t));
    line_of.push_back(number);
  }

  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (!index.contains(templates[i].base_id)) {
      throw ParseError(line_of[i], fmt::format("dangling base_id '{}'", templates[i].base_id));
    }
  }
  return templates;
}

std::string serialize_corpus(std::span<const Template> templates) {
  std::string out;
  for (const auto& t : templates) {
    ordered_json record;
    record["id"] = t.id;
    record["base_id"] = t.base_id;
    record["capability"] = to_string(t.capability.kind);
    record["variant"] = to_string(t.capability.variant);
    record["label"] = to_string(t.label);
    record["text"] = t.text;
    out += record.dump();
    out += '\n';
  }
  return out;
}

TemplateCount CorpusManifest::totals() const {
  TemplateCount sum;
  for (const auto& [kind, count] : per_capability) {
    sum.base += count.base;
    sum.total += count.total;
  }
  return sum;
}

CorpusManifest reference_manifest() {
  CorpusManifest m;
  m.per_capability[CapabilityKind::kTemporalOrder] = {36, 816};
  m.per_capability[CapabilityKind::kPositiveSentiment] = {36, 504};
  m.per_capability[CapabilityKind::kBeneficialEffect] = {12, 48};
  m.per_capability[CapabilityKind::kNegation] = {15, 137};
  return m;
}

CorpusManifest count_templates(std::span<const Template> templates) {
  CorpusManifest m;
  for (const auto& t : templates) {
    auto& count = m.per_capability[t.capability.kind];
    ++count.total;
    if (t.is_base()) ++count.base;
  }
  return m;
}

CorpusManifest parse_manifest(std::string_view source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, fmt::format("manifest syntax error: {}", e.what()));
  }
  const auto read_count = [](const nlohmann::json& node, std::string_view what) {
    if (!node.is_object() || !node.contains("base") || !node.contains("total") ||
        !node["base"].is_number_unsigned() || !node["total"].is_number_unsigned()) {
      throw ParseError(0, fmt::format("manifest entry '{}' needs unsigned 'base' and 'total'", what));
    }
    return TemplateCount{node["base"].get<std::size_t>(), node["total"].get<std::size_t>()};
  };

  if (!doc.is_object() || !doc.contains("per_capability") || !doc["per_capability"].is_object()) {
    throw ParseError(0, "manifest needs a 'per_capability' object");
  }
  CorpusManifest m;
  for (const auto& [name, node] : doc["per_capability"].items()) {
    const auto kind = parse_capability_kind(name);
    if (!kind) throw ParseError(0, fmt::format("manifest: unknown capability '{}'", name));
    m.per_capability[*kind] = read_count(node, name);
  }
  if (doc.contains("totals")) {
    const auto totals = read_count(doc["totals"], "totals");
    if (!(totals == m.totals())) {
      throw ParseError(0, fmt::format("manifest totals {}/{} differ from the per-capability sum {}/{}", totals.base,
                                      totals.total, m.totals().base, m.totals().total));
    }
  }
  return m;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kPlaceholderCapabilityMismatch: return "placeholder/capability mismatch";
    case ViolationKind::kMissingPlaceholder: return "missing placeholder";
    case ViolationKind::kMissingDrug: return "missing drug placeholder";
    case ViolationKind::kIllegalLabel: return "illegal label";
    case ViolationKind::kIllegalVariant: return "illegal variant";
    case ViolationKind::kDuplicateId: return "duplicate id";
    case ViolationKind::kDanglingBase: return "dangling base_id";
    case ViolationKind::kBaseMismatch: return "variation/base mismatch";
    case ViolationKind::kCountMismatch: return "count mismatch";
  }
  return "?";
}

ValidationReport validate_corpus(std::span<const Template> templates, const std::optional<CorpusManifest>& expected,
                                 const ValidationOptions& options) {
  ValidationReport report;
  auto& out = report.violations;

  std::unordered_map<std::string_view, const Template*> by_id;
  for (const auto& t : templates) {
    if (!by_id.emplace(t.id, &t).second) {
      out.push_back({ViolationKind::kDuplicateId, t.id, fmt::format("duplicate template id '{}'", t.id)});
    }
  }

  for (const auto& t : templates) {
    const bool temporal = t.capability.kind == CapabilityKind::kTemporalOrder;
    if (temporal == (t.capability.variant == Variant::kNone)) {
      out.push_back({ViolationKind::kIllegalVariant, t.id,
                     fmt::format("variant '{}' is illegal for capability '{}'", to_string(t.capability.variant),
                                 to_string(t.capability.kind))});
    }
    if (t.capability.kind == CapabilityKind::kPositiveSentiment && t.label != Label::kAde) {
      out.push_back({ViolationKind::kIllegalLabel, t.id, "positive_sentiment templates carry only the ade label"});
    }
    check_placeholders(t, options, out);

    const auto base_it = by_id.find(t.base_id);
    if (base_it == by_id.end()) {
      out.push_back({ViolationKind::kDanglingBase, t.id, fmt::format("base_id '{}' does not exist", t.base_id)});
      continue;
    }
    const Template& base = *base_it->second;
    if (t.is_base()) continue;
    if (!base.is_base()) {
      out.push_back({ViolationKind::kBaseMismatch, t.id, fmt::format("base_id '{}' is itself a variation", base.id)});
    }
    if (base.capability != t.capability || base.label != t.label) {
      out.push_back({ViolationKind::kBaseMismatch, t.id, "variation differs from its base in capability or label"});
    }
    if (as_multiset(base.placeholders) != as_multiset(t.placeholders)) {
      out.push_back({ViolationKind::kBaseMismatch, t.id, "variation changes the placeholder multiset"});
    }
  }

  report.counts = count_templates(templates);
  if (expected) {
    std::set<CapabilityKind> kinds;
    for (const auto& [kind, count] : expected->per_capability) kinds.insert(kind);
    for (const auto& [kind, count] : report.counts.per_capability) kinds.insert(kind);
    for (const auto kind : kinds) {
      const auto want_it = expected->per_capability.find(kind);
      const auto have_it = report.counts.per_capability.find(kind);
      const TemplateCount want = want_it == expected->per_capability.end() ? TemplateCount{} : want_it->second;
      const TemplateCount have = have_it == report.counts.per_capability.end() ? TemplateCount{} : have_it->second;
      if (!(want == have)) {
        out.push_back({ViolationKind::kCountMismatch, "",
                       fmt::format("{}: expected {} base / {} total templates, found {} / {}", to_string(kind),
                                   want.base, want.total, have.base, have.total)});
      }
    }
  }
  return report;
}

std::string variation_id(std::string_view base_id, std::size_t number) {
  return fmt::format("{}-v{:02}", base_id, number);
}

Template apply_variation(const Template& base, const VariationRule& rule, std::size_t variation_number) {
  const bool sentiment = base.capability.kind == CapabilityKind::kPositiveSentiment;
  if (rule.kind == VariationRule::Kind::kConjunction && !sentiment) {
    throw VariationError(fmt::format("{}: conjunction rules apply only to positive_sentiment templates", base.id));
  }
  if (rule.kind == VariationRule::Kind::kVocabulary && sentiment) {
    throw VariationError(fmt::format("{}: positive_sentiment templates vary by conjunction only", base.id));
  }

  struct Edit {
    std::size_t begin;
    std::size_t end;
    const std::string* replacement;
  };
  std::vector<Edit> edits;
  const auto pieces = split_template(base.text);

  for (const auto& sub : rule.substitutions) {
    if (sub.target.empty()) throw VariationError(fmt::format("{}: empty substitution target", base.id));
    if (sub.replacement.find_first_of("{}") != std::string::npos) {
      throw VariationError(
          fmt::format("{}: replacement \"{}\" would change the placeholder multiset", base.id, sub.replacement));
    }
    std::optional<std::size_t> found;
    for (const auto& piece : pieces) {
      if (piece.is_placeholder()) continue;
      const auto& literal = std::get<std::string>(piece.value);
      for (std::size_t pos = literal.find(sub.target); pos != std::string::npos;
           pos = literal.find(sub.target, pos + 1)) {
        const std::size_t end = pos + sub.target.size();
        // whole-phrase match against the full text, so boundaries next to placeholders count too
        const std::size_t abs_begin = piece.offset + pos;
        const std::size_t abs_end = piece.offset + end;
        const bool left_ok =
            !is_word_char(sub.target.front()) || abs_begin == 0 || !is_word_char(base.text[abs_begin - 1]);
        const bool right_ok =
            !is_word_char(sub.target.back()) || abs_end == base.text.size() || !is_word_char(base.text[abs_end]);
        if (left_ok && right_ok) {
          found = abs_begin;
          break;
        }
      }
      if (found) break;
    }
    if (!found) {
      throw VariationError(fmt::format("{}: target \"{}\" not found in base text", base.id, sub.target));
    }
    edits.push_back({*found, *found + sub.target.size(), &sub.replacement});
  }

  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < edits.size(); ++i) {
    if (edits[i].begin < edits[i - 1].end) throw VariationError(fmt::format("{}: overlapping substitutions", base.id));
  }

  Template out = base;
  out.id = variation_id(base.base_id, variation_number);
  out.base_id = base.base_id;
  out.text.clear();
  std::size_t cursor = 0;
  for (const auto& edit : edits) {
    out.text.append(base.text, cursor, edit.begin - cursor);
    out.text += *edit.replacement;
    cursor = edit.end;
  }
  out.text.append(base.text, cursor);
  out.placeholders = extract_placeholders(out.text);
  if (as_multiset(out.placeholders) != as_multiset(base.placeholders)) {
    throw VariationError(fmt::format("{}: rule changes the placeholder multiset", base.id));
  }
  return out;
}

}  // namespace capabench
