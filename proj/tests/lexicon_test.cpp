#include <gtest/gtest.h>

#include <set>

#include "capabench/lexicon.hpp"
#include "test_support.hpp"

using namespace capabench;

namespace {

constexpr TimeUnit kUnits[] = {TimeUnit::kDays, TimeUnit::kWeeks, TimeUnit::kMonths};

std::string minimal_lexicon(std::string_view durations) {
  return std::string(R"({"drugs":["zoloft"],"ades":["Insomnia"],"mild_ades":["gum pain"],)"
                     R"("beneficial_effects":["weight loss"],"time_entities":)") +
         std::string(durations) + "}";
}

}  // namespace

TEST(Duration, RenderingUsesSingularAtOne) {
  EXPECT_EQ(render({1, TimeUnit::kDays}), "1 day");
  EXPECT_EQ(render({2, TimeUnit::kWeeks}), "2 weeks");
  EXPECT_EQ(render({1, TimeUnit::kMonths}), "1 month");
  EXPECT_EQ(parse_duration("3 months"), (Duration{3, TimeUnit::kMonths}));
  EXPECT_EQ(parse_duration("1 days"), (Duration{1, TimeUnit::kDays}));
  EXPECT_THROW(parse_duration("0 weeks"), ParseError);
  EXPECT_THROW(parse_duration("26 days"), ParseError);
  EXPECT_THROW(parse_duration("two weeks"), ParseError);
  EXPECT_THROW(parse_duration("2 fortnights"), ParseError);
}

TEST(Duration, CanonicalDays) {
  EXPECT_EQ(canonical_days({2, TimeUnit::kWeeks}), 14);
  EXPECT_EQ(canonical_days({1, TimeUnit::kDays}), 1);
  EXPECT_EQ(canonical_days({3, TimeUnit::kMonths}), 90);
}

TEST(Duration, RenderParseRoundTripOverTheFullRange) {
  for (const auto& d : generate_time_entities(1, 25, kUnits)) EXPECT_EQ(parse_duration(render(d)), d);
}

TEST(TimeEntities, FullCrossProduct) {
  const auto all = generate_time_entities(1, 25, kUnits);
  ASSERT_EQ(all.size(), 75u);
  std::set<std::pair<int, int>> seen;
  for (const auto& d : all) seen.insert({static_cast<int>(d.unit), d.magnitude});
  EXPECT_EQ(seen.size(), 75u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end(), [](const Duration& a, const Duration& b) {
    return std::pair(a.unit, a.magnitude) < std::pair(b.unit, b.magnitude);
  }));
}

TEST(TimeEntities, SingletonsAndErrors) {
  const TimeUnit days[] = {TimeUnit::kDays};
  const TimeUnit weeks[] = {TimeUnit::kWeeks};
  const auto one = generate_time_entities(1, 1, days);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(render(one[0]), "1 day");
  EXPECT_EQ(render(generate_time_entities(2, 2, weeks).at(0)), "2 weeks");
  EXPECT_THROW(generate_time_entities(3, 2, days), LexiconError);
  EXPECT_THROW(generate_time_entities(0, 2, days), LexiconError);
  EXPECT_THROW(generate_time_entities(1, 26, days), LexiconError);
  EXPECT_THROW(generate_time_entities(1, 2, std::span<const TimeUnit>{}), LexiconError);
}

TEST(RelationalPairs, Examples) {
  const std::vector eight_six{Duration{8, TimeUnit::kWeeks}, Duration{6, TimeUnit::kWeeks}};
  EXPECT_EQ(generate_relational_pairs(eight_six), (std::vector{RelationalPair{eight_six[0], eight_six[1]}}));
  const std::vector three_two{Duration{3, TimeUnit::kWeeks}, Duration{2, TimeUnit::kDays}};
  EXPECT_EQ(generate_relational_pairs(three_two), (std::vector{RelationalPair{three_two[0], three_two[1]}}));
  const std::vector tie{Duration{2, TimeUnit::kWeeks}, Duration{14, TimeUnit::kDays}};
  EXPECT_THROW(generate_relational_pairs(tie), LexiconError);
  EXPECT_THROW(generate_relational_pairs(std::span<const Duration>{}), LexiconError);
}

TEST(RelationalPairs, CountMatchesBruteForceOracle) {
  const auto pool = generate_time_entities(1, 25, kUnits);
  const auto pairs = generate_relational_pairs(pool);
  std::size_t expected = 0;
  for (const auto& a : pool) {
    for (const auto& b : pool) expected += canonical_days(a) > canonical_days(b);
  }
  EXPECT_EQ(pairs.size(), expected);
  // frozen: independent count over (magnitude x {1, 7, 30}) pairs
  EXPECT_EQ(pairs.size(), 2772u);
  for (const auto& p : pairs) EXPECT_GT(canonical_days(p.large), canonical_days(p.small));
}

TEST(LoadLexicon, ShippedListsMatchTheDefaultInventory) {
  const auto& lex = support::shipped_lexicon();
  EXPECT_EQ(lex.drugs, (std::vector<std::string>{"zoloft", "effexor", "cymbalta", "Effexor XR", "effexorxr"}));
  EXPECT_EQ(lex.ades.size(), 15u);
  EXPECT_NE(std::find(lex.ades.begin(), lex.ades.end(), "bad pain in my right arm"), lex.ades.end());
  EXPECT_EQ(lex.mild_ades.size(), 15u);
  EXPECT_EQ(lex.beneficial_effects.size(), 6u);
  EXPECT_EQ(lex.time_entities, generate_time_entities(1, 25, kUnits));
  EXPECT_EQ(lex.relational_pairs, generate_relational_pairs(lex.time_entities));
}

TEST(LoadLexicon, ShippedFileRoundTripsByteIdentically) {
  const auto source = read_file(support::data_path("lexicon.json"));
  EXPECT_EQ(serialize_lexicon(load_lexicon(source)), source);
}

TEST(LoadLexicon, Errors) {
  EXPECT_NO_THROW(load_lexicon(minimal_lexicon(R"([{"magnitude":2,"unit":"weeks"}])")));
  EXPECT_THROW(load_lexicon(minimal_lexicon(R"([{"magnitude":0,"unit":"weeks"}])")), ParseError);
  EXPECT_THROW(load_lexicon(minimal_lexicon(R"([{"magnitude":2,"unit":"years"}])")), ParseError);
  EXPECT_THROW(load_lexicon(minimal_lexicon(R"(["2 weeks"])")), ParseError);
  EXPECT_THROW(load_lexicon(minimal_lexicon(R"([{"magnitude":2,"unit":"weeks"},{"magnitude":2,"unit":"week"}])")),
               ParseError);
  EXPECT_THROW(load_lexicon(R"({"drugs":["a"],"ades":["b"],"mild_ades":["c"],"beneficial_effects":["d"]})"), ParseError);
  EXPECT_THROW(load_lexicon(R"({"drugs":["a","a"],"ades":["b"],"mild_ades":["c"],"beneficial_effects":["d"],)"
                            R"("time_entities":[]})"),
               ParseError);
  EXPECT_THROW(load_lexicon("{"), ParseError);
}

TEST(LoadLexicon, SingleDurationYieldsNoPairs) {
  const auto lex = load_lexicon(minimal_lexicon(R"([{"magnitude":2,"unit":"weeks"}])"));
  EXPECT_TRUE(lex.relational_pairs.empty());
}
