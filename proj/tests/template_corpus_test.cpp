#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "capabench/template_corpus.hpp"
#include "test_support.hpp"

using namespace capabench;

namespace {

std::string record(std::string_view id, std::string_view base, std::string_view cap, std::string_view variant,
                   std::string_view label, std::string_view text) {
  return fmt::format(R"({{"id":"{}","base_id":"{}","capability":"{}","variant":"{}","label":"{}","text":"{}"}})", id,
                     base, cap, variant, label, text) +
         "\n";
}

Template make(std::string id, Capability cap, Label label, std::string text) {
  Template t;
  t.id = id;
  t.base_id = id;
  t.capability = cap;
  t.label = label;
  t.text = text;
  t.placeholders = extract_placeholders(t.text);
  return t;
}

const Capability kStandard{CapabilityKind::kTemporalOrder, Variant::kStandard};
const Capability kNegation{CapabilityKind::kNegation, Variant::kNone};
const Capability kSentiment{CapabilityKind::kPositiveSentiment, Variant::kNone};

bool has_violation(const ValidationReport& r, ViolationKind kind) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

}  // namespace

TEST(ParseCorpus, ExtractsPlaceholdersInOrder) {
  const auto corpus =
      parse_corpus(record("t1", "t1", "temporal_order", "standard", "no_ade", "Before taking {drug}, I experienced {ade}."));
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(corpus[0].label, Label::kNoAde);
  EXPECT_EQ(corpus[0].placeholders, (std::vector{PlaceholderKind::kDrug, PlaceholderKind::kAde}));
  EXPECT_TRUE(corpus[0].is_base());
}

TEST(ParseCorpus, AcceptsTextWithoutPlaceholders) {
  const auto corpus = parse_corpus(record("t1", "t1", "negation", "none", "ade", "I am fine."));
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_TRUE(corpus[0].placeholders.empty());
}

TEST(ParseCorpus, UnknownPlaceholderNameIsReported) {
  const auto src = record("a", "a", "negation", "none", "ade", "ok {drug}") +
                   record("t1", "t1", "negation", "none", "ade", "I took {drg}");
  try {
    parse_corpus(src);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("unknown placeholder name \"drg\""), std::string::npos);
  }
}

TEST(ParseCorpus, ErrorsCarryRecordPosition) {
  const auto good = record("a", "a", "negation", "none", "ade", "{drug}");
  const auto expect_line = [](const std::string& src, std::size_t line, std::string_view fragment) {
    try {
      parse_corpus(src);
      ADD_FAILURE() << "no error for " << fragment;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_line(good + "{not json\n", 2, "syntax error");
  expect_line(good + "# comment\n" + good, 3, "duplicate template id");
  expect_line(good + record("b", "zz", "negation", "none", "ade", "{drug}"), 2, "dangling base_id");
  expect_line(good + record("b", "b", "negation", "sometimes", "ade", "{drug}"), 2, "unknown variant");
  expect_line(good + R"({"id":"c","base_id":"c","capability":"negation","variant":"none","label":"ade"})" + "\n", 2,
              "text");
  expect_line(R"({"id":"c","base_id":"c","capability":"negation","variant":"none","label":"ade","text":"x","extra":1})"
                  "\n",
              1, "unexpected field");
  expect_line(record("b", "b", "negation", "none", "ade", "{drug"), 1, "");
}

TEST(ParseCorpus, ShippedCorpusRoundTripsByteIdentically) {
  const auto source = read_file(support::data_path("templates.jsonl"));
  EXPECT_EQ(serialize_corpus(parse_corpus(source)), source);
}

TEST(ParseCorpus, NoUnmatchedBracesSurvive) {
  for (const auto& t : support::shipped_corpus()) {
    std::size_t depth = 0;
    for (const char c : t.text) {
      if (c == '{') ++depth;
      if (c == '}') {
        ASSERT_GT(depth, 0u) << t.id;
        --depth;
      }
    }
    EXPECT_EQ(depth, 0u) << t.id;
  }
}

TEST(SplitTemplate, PiecesReassembleText) {
  const std::string text = "{time_entity_large} ago I took {drug}, {ade}!";
  const auto pieces = split_template(text);
  std::string rebuilt;
  for (const auto& p : pieces) {
    if (p.is_placeholder()) {
      rebuilt += fmt::format("{{{}}}", to_string(std::get<PlaceholderKind>(p.value)));
    } else {
      rebuilt += std::get<std::string>(p.value);
    }
    EXPECT_EQ(text.substr(p.offset, 1), rebuilt.substr(p.offset, 1));
  }
  EXPECT_EQ(rebuilt, text);
  EXPECT_THROW(split_template("a } b"), ParseError);
  EXPECT_THROW(split_template("a {drug b"), ParseError);
  EXPECT_THROW(split_template("{}"), ParseError);
}

TEST(Validate, ShippedCorpusMatchesReferenceManifest) {
  const auto report = validate_corpus(support::shipped_corpus(), reference_manifest());
  for (const auto& v : report.violations) ADD_FAILURE() << v.template_id << ": " << v.message;
  EXPECT_EQ(report.counts.totals(), (TemplateCount{99, 1505}));
  const std::map<CapabilityKind, TemplateCount> expected{{CapabilityKind::kTemporalOrder, {36, 816}},
                                                         {CapabilityKind::kPositiveSentiment, {36, 504}},
                                                         {CapabilityKind::kBeneficialEffect, {12, 48}},
                                                         {CapabilityKind::kNegation, {15, 137}}};
  EXPECT_EQ(report.counts.per_capability, expected);
}

TEST(Validate, ReferenceManifestFileMatchesBuiltIn) {
  const auto parsed = parse_manifest(read_file(support::data_path("reference_manifest.json")));
  EXPECT_EQ(parsed.per_capability, reference_manifest().per_capability);
  EXPECT_THROW(parse_manifest(R"({"per_capability":{"negation":{"base":1,"total":2}},"totals":{"base":1,"total":3}})"),
               ParseError);
}

TEST(Validate, MildAdeInNegationIsAMismatch) {
  const std::vector t{make("n1", kNegation, Label::kNoAde, "I did not get {mild_ade} or {ade} from {drug}.")};
  const auto report = validate_corpus(t);
  ASSERT_TRUE(has_violation(report, ViolationKind::kPlaceholderCapabilityMismatch));
  EXPECT_NE(report.violations[0].message.find("placeholder/capability mismatch"), std::string::npos);
}

TEST(Validate, MissingBaseTemplateIsACountMismatch) {
  auto corpus = support::shipped_corpus();
  // drop one negation base together with its variations
  const auto victim = std::find_if(corpus.begin(), corpus.end(), [](const Template& t) {
                        return t.capability.kind == CapabilityKind::kNegation;
                      })->base_id;
  std::erase_if(corpus, [&](const Template& t) { return t.base_id == victim; });
  const auto report = validate_corpus(corpus, reference_manifest());
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, ViolationKind::kCountMismatch);
  EXPECT_NE(report.violations[0].message.find("negation"), std::string::npos);
  EXPECT_EQ(report.counts.totals().base, 98u);
}

TEST(Validate, StructuralRules) {
  const Capability single{CapabilityKind::kTemporalOrder, Variant::kSingleTime};
  const Capability doubled{CapabilityKind::kTemporalOrder, Variant::kDoubleTime};
  const Capability benefit{CapabilityKind::kBeneficialEffect, Variant::kNone};
  const auto check = [](std::vector<Template> t, ViolationKind kind, const ValidationOptions& o = {}) {
    EXPECT_TRUE(has_violation(validate_corpus(t, std::nullopt, o), kind)) << t[0].text;
  };
  check({make("a", kSentiment, Label::kNoAde, "{drug} {mild_ade}")}, ViolationKind::kIllegalLabel);
  check({make("a", Capability{CapabilityKind::kNegation, Variant::kStandard}, Label::kAde, "{drug} {ade}")},
        ViolationKind::kIllegalVariant);
  check({make("a", Capability{CapabilityKind::kTemporalOrder, Variant::kNone}, Label::kAde, "{drug} {ade}")},
        ViolationKind::kIllegalVariant);
  check({make("a", single, Label::kAde, "{drug} {ade}")}, ViolationKind::kMissingPlaceholder);
  check({make("a", doubled, Label::kAde, "{drug} {ade} {time_entity_large}")}, ViolationKind::kMissingPlaceholder);
  check({make("a", kStandard, Label::kAde, "{drug} {ade} {time_entity}")}, ViolationKind::kPlaceholderCapabilityMismatch);
  check({make("a", benefit, Label::kAde, "{drug} {ade}")}, ViolationKind::kPlaceholderCapabilityMismatch);
  check({make("a", kNegation, Label::kAde, "no {ade} here")}, ViolationKind::kMissingDrug);
  check({make("a", kNegation, Label::kAde, "{drug}")}, ViolationKind::kMissingPlaceholder);

  EXPECT_TRUE(validate_corpus(std::vector{make("a", kNegation, Label::kAde, "no {ade} here")}, std::nullopt,
                              {.allow_drugless = true})
                  .ok());
  EXPECT_TRUE(validate_corpus(std::vector{make("a", doubled, Label::kAde,
                                               "{time_entity_large} {drug} {ade} {time_entity_small}")})
                  .ok());
}

TEST(Validate, VariationsMustMatchTheirBase) {
  auto base = make("b", kNegation, Label::kAde, "not {drug} {ade}");
  auto var = make("b-v01", kNegation, Label::kNoAde, "never {drug} {ade}");
  var.base_id = "b";
  auto report = validate_corpus(std::vector{base, var});
  EXPECT_TRUE(has_violation(report, ViolationKind::kBaseMismatch));

  var.label = Label::kAde;
  var.text = "never {drug}";
  var.placeholders = extract_placeholders(var.text);
  report = validate_corpus(std::vector{base, var});
  EXPECT_TRUE(has_violation(report, ViolationKind::kBaseMismatch));

  auto chained = make("c", kNegation, Label::kAde, "no {drug} {ade}");
  chained.base_id = "b-v01";
  var = make("b-v01", kNegation, Label::kAde, "never {drug} {ade}");
  var.base_id = "b";
  EXPECT_TRUE(has_violation(validate_corpus(std::vector{base, var, chained}), ViolationKind::kBaseMismatch));
  EXPECT_TRUE(has_violation(validate_corpus(std::vector{base, base}), ViolationKind::kDuplicateId));
  auto dangling = make("d", kNegation, Label::kAde, "no {drug} {ade}");
  dangling.base_id = "zz";
  EXPECT_TRUE(has_violation(validate_corpus(std::vector{dangling}), ViolationKind::kDanglingBase));
}

TEST(Variation, VocabularySwap) {
  const auto base = make("to-01", kStandard, Label::kNoAde, "Before taking {drug}, I experienced {ade}.");
  const auto v = apply_variation(base, {VariationRule::Kind::kVocabulary, {{"experienced", "encountered"}}}, 3);
  EXPECT_EQ(v.text, "Before taking {drug}, I encountered {ade}.");
  EXPECT_EQ(v.id, "to-01-v03");
  EXPECT_EQ(v.base_id, "to-01");
  EXPECT_EQ(v.label, base.label);
}

TEST(Variation, IdentityRuleKeepsText) {
  const auto base = make("to-01", kStandard, Label::kAde, "I took {drug} and had {ade}.");
  const auto v = apply_variation(base, {}, 1);
  EXPECT_EQ(v.text, base.text);
  EXPECT_EQ(v.id, "to-01-v01");
  EXPECT_EQ(v.base_id, base.id);
}

TEST(Variation, ConjunctionRemovalDiffersOnlyByTheConjunction) {
  const auto base = make("ps-01", kSentiment, Label::kAde, "{drug} gives me {mild_ade}. Still, I am happy with it.");
  const auto v = apply_variation(base, {VariationRule::Kind::kConjunction, {{"Still, ", ""}}}, 1);
  EXPECT_EQ(v.text, "{drug} gives me {mild_ade}. I am happy with it.");
  EXPECT_EQ(v.label, Label::kAde);
  // token diff: the only removed token is the conjunction
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
      const auto j = s.find(' ', i);
      out.push_back(s.substr(i, j - i));
      if (j == std::string::npos) break;
      i = j + 1;
    }
    return out;
  };
  auto a = split(base.text);
  const auto b = split(v.text);
  a.erase(std::find(a.begin(), a.end(), "Still,"));
  EXPECT_EQ(a, b);
}

TEST(Variation, Errors) {
  const auto base = make("to-01", kStandard, Label::kAde, "I took {drug} and had {ade}.");
  using K = VariationRule::Kind;
  EXPECT_THROW(apply_variation(base, {K::kVocabulary, {{"swallowed", "took"}}}, 1), VariationError);
  EXPECT_THROW(apply_variation(base, {K::kVocabulary, {{"had", "had {ade} and"}}}, 1), VariationError);
  EXPECT_THROW(apply_variation(base, {K::kVocabulary, {{"took {drug}", "x"}}}, 1), VariationError);
  EXPECT_THROW(apply_variation(base, {K::kVocabulary, {{"took", "a"}, {"took", "b"}}}, 1), VariationError);
  EXPECT_THROW(apply_variation(base, {K::kConjunction, {{" and", ","}}}, 1), VariationError);
  const auto ps = make("ps-01", kSentiment, Label::kAde, "{drug} gives me {mild_ade}, but I like it.");
  EXPECT_THROW(apply_variation(ps, {K::kVocabulary, {{"like", "love"}}}, 1), VariationError);
  // whole-phrase matching: "had" inside "hadn't" does not count, "had" alone does
  const auto word = make("to-02", kStandard, Label::kAde, "I shadowed {drug} and had {ade}.");
  EXPECT_EQ(apply_variation(word, {K::kVocabulary, {{"had", "got"}}}, 1).text, "I shadowed {drug} and got {ade}.");
}

TEST(Variation, ShippedVariationsPreserveLabelAndPlaceholders) {
  std::map<std::string, const Template*> bases;
  for (const auto& t : support::shipped_corpus()) {
    if (t.is_base()) bases[t.id] = &t;
  }
  for (const auto& t : support::shipped_corpus()) {
    const auto* base = bases.at(t.base_id);
    EXPECT_EQ(t.label, base->label) << t.id;
    EXPECT_EQ(t.capability, base->capability) << t.id;
    auto a = t.placeholders;
    auto b = base->placeholders;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b) << t.id;
  }
}
