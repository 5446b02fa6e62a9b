#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capabench/template_corpus.hpp"

namespace capabench {

class AuthoringError : public Error {
 public:
  using Error::Error;
};

/// Interchangeable words and conjunctions. Each group lists its alternatives in order.
struct SwapGroups {
  std::map<std::string, std::vector<std::string>> vocabulary;
  std::map<std::string, std::vector<std::string>> conjunction;
};

SwapGroups parse_swap_groups(std::string_view source);

/// A word in a base template that variations may replace by another member of `group`.
struct Slot {
  std::string word;
  std::string group;
};

struct BaseSpec {
  Template base;
  std::size_t variations = 0;
  std::vector<Slot> slots;
};

/// Line-delimited `{capability, variant, label, text, variations, slots: [{word, group}]}`.
/// Ids are assigned in file order, numbered per (capability, variant, label).
std::vector<BaseSpec> parse_base_specs(std::string_view source);

/// Expands every base into itself followed by its variations. Variation n is the n-th
/// non-identity combination of slot alternatives, enumerated with the last slot fastest.
/// Each slot word must occur exactly once in the base text.
std::vector<Template> author_corpus(std::span<const BaseSpec> bases, const SwapGroups& groups);

}  // namespace capabench
