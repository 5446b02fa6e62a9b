#include "capabench/authoring.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "capabench/io.hpp"
#include "json.hpp"

namespace capabench {

using json = nlohmann::json;

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::size_t count_whole_phrase(const Template& t, std::string_view word) {
  std::size_t count = 0;
  for (const auto& piece : split_template(t.text)) {
    if (piece.is_placeholder()) continue;
    const auto& literal = std::get<std::string>(piece.value);
    for (auto pos = literal.find(word); pos != std::string::npos; pos = literal.find(word, pos + 1)) {
      const auto begin = piece.offset + pos;
      const auto end = begin + word.size();
      const bool left = !is_word_char(word.front()) || begin == 0 || !is_word_char(t.text[begin - 1]);
      const bool right = !is_word_char(word.back()) || end == t.text.size() || !is_word_char(t.text[end]);
      count += left && right;
    }
  }
  return count;
}

std::map<std::string, std::vector<std::string>> read_groups(const json& doc, const char* key) {
  std::map<std::string, std::vector<std::string>> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_object()) throw ParseError(0, fmt::format("swap groups: '{}' must be an object", key));
  for (const auto& [name, members] : doc[key].items()) {
    if (!members.is_array() || members.size() < 2) {
      throw ParseError(0, fmt::format("swap group '{}' needs at least two members", name));
    }
    std::vector<std::string> list;
    for (const auto& m : members) {
      if (!m.is_string()) throw ParseError(0, fmt::format("swap group '{}' has a non-string member", name));
      if (std::find(list.begin(), list.end(), m.get<std::string>()) != list.end()) {
        throw ParseError(0, fmt::format("swap group '{}' repeats '{}'", name, m.get<std::string>()));
      }
      list.push_back(m.get<std::string>());
    }
    out.emplace(name, std::move(list));
  }
  return out;
}

std::string string_field(const json& record, const char* name, std::size_t line) {
  if (!record.contains(name) || !record[name].is_string()) {
    throw ParseError(line, fmt::format("missing string field '{}'", name));
  }
  return record[name].get<std::string>();
}

}  // namespace

SwapGroups parse_swap_groups(std::string_view source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError(0, fmt::format("swap groups syntax error: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError(0, "swap groups must be an object");
  SwapGroups groups{read_groups(doc, "vocabulary"), read_groups(doc, "conjunction")};
  for (const auto& [name, members] : groups.vocabulary) {
    if (groups.conjunction.contains(name)) throw ParseError(0, fmt::format("swap group '{}' defined twice", name));
  }
  return groups;
}

std::vector<BaseSpec> parse_base_specs(std::string_view source) {
  std::vector<BaseSpec> specs;
  std::map<TestKey, std::size_t> numbering;
  for (const auto& [number, text] : record_lines(source, /*skip_comments=*/true)) {
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(number, fmt::format("syntax error: {}", e.what()));
    }
    if (!record.is_object()) throw ParseError(number, "syntax error: record is not an object");

    BaseSpec spec;
    auto& t = spec.base;
    const auto capability = string_field(record, "capability", number);
    const auto variant = string_field(record, "variant", number);
    const auto label = string_field(record, "label", number);
    const auto kind = parse_capability_kind(capability);
    if (!kind) throw ParseError(number, fmt::format("unknown capability '{}'", capability));
    const auto var = parse_variant(variant);
    if (!var) throw ParseError(number, fmt::format("unknown variant '{}'", variant));
    const auto lab = parse_label(label);
    if (!lab) throw ParseError(number, fmt::format("unknown label '{}'", label));
    t.capability = {*kind, *var};
    t.label = *lab;
    t.text = string_field(record, "text", number);
    try {
      t.placeholders = extract_placeholders(t.text);
    } catch (const ParseError& e) {
      throw ParseError(number, e.what());
    }
    const auto n = ++numbering[TestKey{t.capability, t.label}];
    t.id = fmt::format("{}-{}-{}-{:02}", capability, variant, label, n);
    t.base_id = t.id;

    if (!record.contains("variations") || !record["variations"].is_number_unsigned()) {
      throw ParseError(number, "missing non-negative integer 'variations'");
    }
    spec.variations = record["variations"].get<std::size_t>();
    if (record.contains("slots")) {
      if (!record["slots"].is_array()) throw ParseError(number, "'slots' must be an array");
      for (const auto& slot : record["slots"]) {
        if (!slot.is_object()) throw ParseError(number, "slot must be an object");
        spec.slots.push_back({string_field(slot, "word", number), string_field(slot, "group", number)});
      }
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<Template> author_corpus(std::span<const BaseSpec> bases, const SwapGroups& groups) {
  std::vector<Template> corpus;
  for (const auto& spec : bases) {
    const auto& base = spec.base;
    corpus.push_back(base);
    if (spec.variations == 0) continue;
    if (spec.slots.empty()) throw AuthoringError(fmt::format("{}: variations requested but no slots", base.id));

    std::vector<const std::vector<std::string>*> alternatives;
    std::vector<std::size_t> identity;
    std::optional<VariationRule::Kind> kind;
    for (const auto& slot : spec.slots) {
      const std::vector<std::string>* members = nullptr;
      VariationRule::Kind slot_kind = VariationRule::Kind::kVocabulary;
      if (const auto it = groups.vocabulary.find(slot.group); it != groups.vocabulary.end()) {
        members = &it->second;
      } else if (const auto jt = groups.conjunction.find(slot.group); jt != groups.conjunction.end()) {
        members = &jt->second;
        slot_kind = VariationRule::Kind::kConjunction;
      } else {
        throw AuthoringError(fmt::format("{}: unknown swap group '{}'", base.id, slot.group));
      }
      if (kind && *kind != slot_kind) throw AuthoringError(fmt::format("{}: mixes vocabulary and conjunction slots", base.id));
      kind = slot_kind;
      if (slot.word.empty()) throw AuthoringError(fmt::format("{}: empty slot word", base.id));
      const auto pos = std::find(members->begin(), members->end(), slot.word);
      if (pos == members->end()) {
        throw AuthoringError(fmt::format("{}: '{}' is not a member of group '{}'", base.id, slot.word, slot.group));
      }
      if (const auto n = count_whole_phrase(base, slot.word); n != 1) {
        throw AuthoringError(fmt::format("{}: slot word '{}' occurs {} times", base.id, slot.word, n));
      }
      alternatives.push_back(members);
      identity.push_back(static_cast<std::size_t>(pos - members->begin()));
    }

    std::set<std::string> texts{base.text};
    std::vector<std::size_t> choice(alternatives.size(), 0);
    std::size_t made = 0;
    bool exhausted = false;
    while (made < spec.variations && !exhausted) {
      if (choice != identity) {
        VariationRule rule{*kind, {}};
        for (std::size_t s = 0; s < choice.size(); ++s) {
          if (choice[s] != identity[s]) rule.substitutions.push_back({spec.slots[s].word, (*alternatives[s])[choice[s]]});
        }
        auto variation = apply_variation(base, rule, made + 1);
        if (!texts.insert(variation.text).second) {
          throw AuthoringError(fmt::format("{}: variation repeats text \"{}\"", base.id, variation.text));
        }
        corpus.push_back(std::move(variation));
        ++made;
      }
      // odometer step, last slot fastest
      std::size_t s = choice.size();
      while (s > 0) {
        --s;
        if (++choice[s] < alternatives[s]->size()) break;
        choice[s] = 0;
        if (s == 0) exhausted = true;
      }
    }
    if (made < spec.variations) {
      throw AuthoringError(
          fmt::format("{}: only {} variations available, {} requested", base.id, made, spec.variations));
    }
  }
  return corpus;
}

}  // namespace capabench
