#include "capabench/generator.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "capabench/io.hpp"
#include "json.hpp"

namespace capabench {

using nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

template <typename T>
std::vector<T> pick(const std::vector<T>& pool, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (const auto i : indices) out.push_back(pool[i]);
  return out;
}

void check_count(std::string_view name, std::size_t count, std::size_t pool) {
  if (count == 0) throw GenerationError(fmt::format("{} must be at least 1", name));
  if (count > pool) {
    throw GenerationError(fmt::format("{} = {} exceeds the lexicon pool of {}", name, count, pool));
  }
}

bool is_pair_kind(PlaceholderKind kind) {
  return kind == PlaceholderKind::kTimeEntitySmall || kind == PlaceholderKind::kTimeEntityLarge;
}

// One axis of the cross product. The relational pair is a single axis covering both
// time_entity_small and time_entity_large.
struct Axis {
  PlaceholderKind kind;
  bool pair = false;
};

std::vector<Axis> axes_of(const Template& t) {
  std::vector<Axis> axes;
  std::set<PlaceholderKind> seen;
  bool pair_added = false;
  for (const auto kind : t.placeholders) {
    if (is_pair_kind(kind)) {
      if (!pair_added) axes.push_back({kind, true});
      pair_added = true;
      continue;
    }
    if (seen.insert(kind).second) axes.push_back({kind, false});
  }
  return axes;
}

std::size_t axis_size(const Axis& axis, const EntitySelection& s) {
  if (axis.pair) return s.relational_pairs.size();
  switch (axis.kind) {
    case PlaceholderKind::kDrug: return s.drugs.size();
    case PlaceholderKind::kAde: return s.ades.size();
    case PlaceholderKind::kMildAde: return s.mild_ades.size();
    case PlaceholderKind::kTimeEntity: return s.time_entities.size();
    default: return 0;
  }
}

std::string entity_at(PlaceholderKind kind, std::size_t index, const EntitySelection& s) {
  switch (kind) {
    case PlaceholderKind::kDrug: return s.drugs[index];
    case PlaceholderKind::kAde: return s.ades[index];
    case PlaceholderKind::kMildAde: return s.mild_ades[index];
    case PlaceholderKind::kTimeEntity: return render(s.time_entities[index]);
    case PlaceholderKind::kTimeEntityLarge: return render(s.relational_pairs[index].large);
    case PlaceholderKind::kTimeEntitySmall: return render(s.relational_pairs[index].small);
  }
  return {};
}

std::size_t digits(std::size_t n) {
  std::size_t d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

std::string field_string(const ordered_json& record, std::string_view name, std::size_t line) {
  const auto it = record.find(name);
  if (it == record.end() || !it->is_string()) {
    throw ParseError(line, fmt::format("suite record needs string field '{}'", name));
  }
  return it->get<std::string>();
}

}  // namespace

Sampler Sampler::for_stream(std::uint64_t seed, std::uint64_t stream) { return Sampler(splitmix64(seed + stream)); }

std::uint64_t Sampler::below(std::uint64_t bound) {
  if (bound == 0) throw GenerationError("cannot draw below 0");
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t raw = engine_();
    if (raw >= threshold) return raw % bound;
  }
}

std::vector<std::size_t> Sampler::sample(std::size_t population, std::size_t count) {
  if (count > population) throw GenerationError("sample larger than population");
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(below(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> Sampler::permutation(std::size_t population) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < population; ++i) {
    const auto j = i + static_cast<std::size_t>(below(population - i));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

SamplingConfig parse_sampling_config(std::string_view source, SamplingConfig config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, fmt::format("config syntax error: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError(0, "config must be an object");
  const auto count = [&](const char* name, std::size_t& target) {
    if (!doc.contains(name)) return;
    if (!doc[name].is_number_unsigned()) throw ParseError(0, fmt::format("config '{}' must be a count", name));
    target = doc[name].get<std::size_t>();
  };
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> known{"n_ades",         "n_mild_ades",    "n_drugs",
                                             "n_single_time",  "n_relational_pairs", "one_variation_per_base",
                                             "seed",           "pair_sampling"};
    if (!known.contains(key)) throw ParseError(0, fmt::format("config: unknown key '{}'", key));
  }
  count("n_ades", config.n_ades);
  count("n_mild_ades", config.n_mild_ades);
  count("n_drugs", config.n_drugs);
  count("n_single_time", config.n_single_time);
  count("n_relational_pairs", config.n_relational_pairs);
  if (doc.contains("one_variation_per_base")) {
    if (!doc["one_variation_per_base"].is_boolean()) throw ParseError(0, "config 'one_variation_per_base' must be a bool");
    config.one_variation_per_base = doc["one_variation_per_base"].get<bool>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError(0, "config 'seed' must be an unsigned integer");
    config.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("pair_sampling")) {
    const auto mode = doc["pair_sampling"].is_string() ? doc["pair_sampling"].get<std::string>() : std::string();
    if (mode == "pairs") {
      config.pair_sampling = PairSampling::kPairs;
    } else if (mode == "durations") {
      config.pair_sampling = PairSampling::kDurations;
    } else {
      throw ParseError(0, "config 'pair_sampling' must be \"pairs\" or \"durations\"");
    }
  }
  return config;
}

std::string serialize_sampling_config(const SamplingConfig& config) {
  ordered_json doc;
  doc["n_ades"] = config.n_ades;
  doc["n_mild_ades"] = config.n_mild_ades;
  doc["n_drugs"] = config.n_drugs;
  doc["n_single_time"] = config.n_single_time;
  doc["n_relational_pairs"] = config.n_relational_pairs;
  doc["one_variation_per_base"] = config.one_variation_per_base;
  doc["seed"] = config.seed;
  doc["pair_sampling"] = config.pair_sampling == PairSampling::kPairs ? "pairs" : "durations";
  return doc.dump(2) + "\n";
}

EntitySelection sample_entities(const Lexicon& lexicon, const SamplingConfig& config) {
  check_count("n_drugs", config.n_drugs, lexicon.drugs.size());
  check_count("n_ades", config.n_ades, lexicon.ades.size());
  check_count("n_mild_ades", config.n_mild_ades, lexicon.mild_ades.size());
  check_count("n_single_time", config.n_single_time, lexicon.time_entities.size());

  auto sampler = Sampler::for_stream(config.seed, kEntityStream);
  EntitySelection s;
  s.drugs = pick(lexicon.drugs, sampler.sample(lexicon.drugs.size(), config.n_drugs));
  s.ades = pick(lexicon.ades, sampler.sample(lexicon.ades.size(), config.n_ades));
  s.mild_ades = pick(lexicon.mild_ades, sampler.sample(lexicon.mild_ades.size(), config.n_mild_ades));
  s.time_entities = pick(lexicon.time_entities, sampler.sample(lexicon.time_entities.size(), config.n_single_time));

  if (config.pair_sampling == PairSampling::kPairs) {
    check_count("n_relational_pairs", config.n_relational_pairs, lexicon.relational_pairs.size());
    s.relational_pairs =
        pick(lexicon.relational_pairs, sampler.sample(lexicon.relational_pairs.size(), config.n_relational_pairs));
  } else {
    if (config.n_relational_pairs == 0) throw GenerationError("n_relational_pairs must be at least 1");
    const auto order = sampler.permutation(lexicon.time_entities.size());
    std::size_t i = 0;
    while (s.relational_pairs.size() < config.n_relational_pairs && i + 1 < order.size()) {
      const auto& a = lexicon.time_entities[order[i]];
      const auto& b = lexicon.time_entities[order[i + 1]];
      if (canonical_days(a) == canonical_days(b)) {
        ++i;
        continue;
      }
      s.relational_pairs.push_back(canonical_days(a) > canonical_days(b) ? RelationalPair{a, b} : RelationalPair{b, a});
      i += 2;
    }
    if (s.relational_pairs.size() < config.n_relational_pairs) {
      throw GenerationError(fmt::format("time pool yields only {} disjoint relational pairs, {} requested",
                                        s.relational_pairs.size(), config.n_relational_pairs));
    }
  }
  return s;
}

std::vector<Template> select_variations(std::span<const Template> corpus, const SamplingConfig& config) {
  if (!config.one_variation_per_base) return {corpus.begin(), corpus.end()};

  std::vector<std::string_view> base_order;
  std::unordered_map<std::string_view, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(corpus[i].base_id);
    if (inserted) base_order.push_back(corpus[i].base_id);
    it->second.push_back(i);
  }

  auto sampler = Sampler::for_stream(config.seed, kVariationStream);
  std::vector<std::size_t> chosen;
  for (const auto base_id : base_order) {
    const auto& members = groups[base_id];
    if (corpus[members.front()].capability.kind == CapabilityKind::kBeneficialEffect) {
      chosen.insert(chosen.end(), members.begin(), members.end());
      continue;
    }
    chosen.push_back(members[static_cast<std::size_t>(sampler.below(members.size()))]);
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<Template> out;
  out.reserve(chosen.size());
  for (const auto i : chosen) out.push_back(corpus[i]);
  return out;
}

std::string render_template(const Template& t, const Fills& fills) {
  const auto lookup = [&](PlaceholderKind kind) -> const std::string& {
    const auto name = to_string(kind);
    for (const auto& [key, value] : fills) {
      if (key == name) return value;
    }
    throw GenerationError(fmt::format("{}: no fill for {{{}}}", t.id, name));
  };

  const auto pieces = split_template(t.text);
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!pieces[i].is_placeholder()) {
      out += std::get<std::string>(pieces[i].value);
      continue;
    }
    const auto& value = lookup(std::get<PlaceholderKind>(pieces[i].value));
    if (!out.empty() && !value.empty() && is_word_char(out.back()) && is_word_char(value.front())) out += ' ';
    out += value;
    if (i + 1 < pieces.size() && !pieces[i + 1].is_placeholder() && !value.empty()) {
      const auto& next = std::get<std::string>(pieces[i + 1].value);
      if (is_word_char(value.back()) && is_word_char(next.front())) out += ' ';
    }
  }
  return out;
}

std::size_t expected_case_count(const Template& t, const EntitySelection& selection) {
  std::size_t product = 1;
  for (const auto& axis : axes_of(t)) product *= axis_size(axis, selection);
  return product;
}

std::vector<TestCase> expand(const Template& t, const EntitySelection& selection) {
  const auto axes = axes_of(t);
  std::vector<std::size_t> sizes;
  for (const auto& axis : axes) {
    const auto n = axis_size(axis, selection);
    if (n == 0) {
      throw GenerationError(fmt::format("{}: empty entity pool for {{{}}}", t.id,
                                        axis.pair ? "time_entity_large/time_entity_small" : to_string(axis.kind)));
    }
    sizes.push_back(n);
  }

  // distinct placeholder names in order of first appearance, each bound to its axis
  std::vector<std::pair<PlaceholderKind, std::size_t>> names;
  for (const auto kind : t.placeholders) {
    if (std::any_of(names.begin(), names.end(), [&](const auto& n) { return n.first == kind; })) continue;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (axes[a].kind == kind || (axes[a].pair && is_pair_kind(kind))) {
        names.emplace_back(kind, a);
        break;
      }
    }
  }

  const std::size_t total = expected_case_count(t, selection);
  const std::size_t width = std::max<std::size_t>(4, digits(total == 0 ? 0 : total - 1));
  std::vector<TestCase> cases;
  cases.reserve(total);
  std::vector<std::size_t> position(axes.size(), 0);
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rest = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      position[a] = rest % sizes[a];
      rest /= sizes[a];
    }
    TestCase c;
    c.case_id = fmt::format("{}#{:0{}}", t.id, index, width);
    c.template_id = t.id;
    c.capability = t.capability;
    c.gold = t.label;
    for (const auto& [kind, axis] : names) {
      c.fills.emplace_back(std::string(to_string(kind)), entity_at(kind, position[axis], selection));
    }
    c.text = render_template(t, c.fills);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::string fingerprint(std::span<const Template> corpus, const Lexicon& lexicon) {
  return sha256_hex(serialize_corpus(corpus) + serialize_lexicon(lexicon));
}

Suite build_suite(std::span<const Template> corpus, const Lexicon& lexicon, const SamplingConfig& config,
                  const SuiteOptions& options) {
  const auto report = validate_corpus(corpus, std::nullopt, {.allow_drugless = options.allow_drugless});
  if (!report.ok()) {
    std::string message = fmt::format("corpus has {} violation(s)", report.violations.size());
    for (std::size_t i = 0; i < std::min<std::size_t>(report.violations.size(), 5); ++i) {
      const auto& v = report.violations[i];
      message += fmt::format("\n  {}: {}", v.template_id, v.message);
    }
    throw GenerationError(message);
  }

  const auto selection = sample_entities(lexicon, config);
  Suite suite;
  suite.config = config;
  suite.fingerprint = fingerprint(corpus, lexicon);
  for (const auto& t : select_variations(corpus, config)) {
    if (options.capability && t.capability.kind != *options.capability) continue;
    auto cases = expand(t, selection);
    suite.cases.insert(suite.cases.end(), std::make_move_iterator(cases.begin()), std::make_move_iterator(cases.end()));
  }
  std::sort(suite.cases.begin(), suite.cases.end(),
            [](const TestCase& a, const TestCase& b) { return a.case_id < b.case_id; });
  return suite;
}

std::string serialize_suite(const Suite& suite) {
  std::string out;
  for (const auto& c : suite.cases) {
    ordered_json record;
    record["case_id"] = c.case_id;
    record["template_id"] = c.template_id;
    record["capability"] = to_string(c.capability.kind);
    record["variant"] = to_string(c.capability.variant);
    record["label"] = to_string(c.gold);
    record["text"] = c.text;
    record["fills"] = ordered_json::object();
    for (const auto& [name, value] : c.fills) record["fills"][name] = value;
    out += record.dump();
    out += '\n';
  }
  return out;
}

Suite parse_suite(std::string_view source) {
  Suite suite;
  std::unordered_set<std::string> ids;
  for (const auto& [number, text] : record_lines(source, /*skip_comments=*/false)) {
    ordered_json record;
    try {
      record = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
      throw ParseError(number, fmt::format("syntax error: {}", e.what()));
    }
    if (!record.is_object()) throw ParseError(number, "suite record is not an object");
    TestCase c;
    c.case_id = field_string(record, "case_id", number);
    c.template_id = field_string(record, "template_id", number);
    const auto kind = parse_capability_kind(field_string(record, "capability", number));
    const auto variant = parse_variant(field_string(record, "variant", number));
    const auto label = parse_label(field_string(record, "label", number));
    if (!kind || !variant || !label) throw ParseError(number, "unknown capability, variant or label");
    c.capability = {*kind, *variant};
    c.gold = *label;
    c.text = field_string(record, "text", number);
    if (c.text.find_first_of("{}") != std::string::npos) {
      throw ParseError(number, "rendered text still contains a brace");
    }
    const auto fills = record.find("fills");
    if (fills == record.end() || !fills->is_object()) throw ParseError(number, "suite record needs a 'fills' object");
    for (const auto& [name, value] : fills->items()) {
      if (!parse_placeholder_kind(name) || !value.is_string()) {
        throw ParseError(number, fmt::format("bad fill '{}'", name));
      }
      c.fills.emplace_back(name, value.get<std::string>());
    }
    if (!ids.insert(c.case_id).second) throw ParseError(number, fmt::format("duplicate case_id '{}'", c.case_id));
    suite.cases.push_back(std::move(c));
  }
  std::sort(suite.cases.begin(), suite.cases.end(),
            [](const TestCase& a, const TestCase& b) { return a.case_id < b.case_id; });
  return suite;
}

std::map<TestKey, std::size_t> count_by_test(std::span<const TestCase> cases) {
  std::map<TestKey, std::size_t> counts;
  for (const auto& c : cases) ++counts[c.key()];
  return counts;
}

std::map<Label, std::size_t> count_by_label(std::span<const TestCase> cases) {
  std::map<Label, std::size_t> counts;
  for (const auto& c : cases) ++counts[c.gold];
  return counts;
}

std::map<TestKey, std::size_t> reference_test_counts() {
  using enum Label;
  const Capability standard{CapabilityKind::kTemporalOrder, Variant::kStandard};
  const Capability single{CapabilityKind::kTemporalOrder, Variant::kSingleTime};
  const Capability dual{CapabilityKind::kTemporalOrder, Variant::kDoubleTime};
  const Capability sentiment{CapabilityKind::kPositiveSentiment, Variant::kNone};
  const Capability beneficial{CapabilityKind::kBeneficialEffect, Variant::kNone};
  const Capability negation{CapabilityKind::kNegation, Variant::kNone};
  return {
      {{standard, kNoAde}, 1050},  {{standard, kAde}, 900},  {{single, kNoAde}, 1050},
      {{single, kAde}, 1050},      {{dual, kNoAde}, 1575},   {{dual, kAde}, 1575},
      {{sentiment, kAde}, 2700},   {{beneficial, kNoAde}, 120}, {{beneficial, kAde}, 120},
      {{negation, kNoAde}, 825},   {{negation, kAde}, 300},
  };
}

std::vector<std::string> reference_count_diagnostics(const std::map<TestKey, std::size_t>& counts) {
  const auto expected = reference_test_counts();
  std::set<TestKey> keys;
  for (const auto& [k, n] : expected) keys.insert(k);
  for (const auto& [k, n] : counts) keys.insert(k);
  std::vector<std::string> out;
  for (const auto& key : keys) {
    const auto want = expected.contains(key) ? expected.at(key) : 0;
    const auto have = counts.contains(key) ? counts.at(key) : 0;
    if (want != have) out.push_back(fmt::format("{}: expected {} cases, generated {}", display_name(key), want, have));
  }
  return out;
}

std::map<Label, double> mean_token_lengths(std::span<const TestCase> cases) {
  std::map<Label, std::pair<std::size_t, std::size_t>> sums;
  for (const auto& c : cases) {
    auto& [tokens, n] = sums[c.gold];
    tokens += count_tokens(c.text);
    ++n;
  }
  std::map<Label, double> out;
  for (const auto& [label, sum] : sums) {
    out[label] = static_cast<double>(sum.first) / static_cast<double>(sum.second);
  }
  return out;
}

}  // namespace capabench
