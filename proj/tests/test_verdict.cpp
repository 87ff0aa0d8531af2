// Copyright 2026 The contradial Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "contradial/verdict.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "toy_fixtures.hpp"

namespace {

using namespace contradial;

struct RawOutput {
  std::string text;
  VerdictClass expected;
};

std::vector<RawOutput> raw_outputs() {
  std::vector<RawOutput> out;
  const auto content = fixtures::slurp(fixtures::fixture_path("raw_outputs.jsonl"));
  for (const auto& line : text::split_lines(content)) {
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line);
    out.push_back({j.at("text").get<std::string>(), *parse_verdict_class(j.at("expected").get<std::string>())});
  }
  return out;
}

TEST(Verdict, RawOutputsClassifyUnderVicunaLlama) {
  const auto outputs = raw_outputs();
  ASSERT_EQ(outputs.size(), 3u);
  const auto rules = vicuna_llama_rules();
  for (const auto& o : outputs) {
    const auto v = classify_response(o.text, rules);
    EXPECT_EQ(v.cls, o.expected) << o.text;
    ASSERT_TRUE(v.matched_pattern.has_value());
  }
  EXPECT_EQ(classify_response(outputs[0].text, rules).matched_pattern, "here is a contradiction");
  EXPECT_EQ(classify_response(outputs[2].text, rules).matched_pattern, "no contradiction");
}

TEST(Verdict, MistralEchoedDialogueIsNoClear) {
  const std::string echo =
      "a: Have you ever been to Paris?\nb: Yes, I went there last spring.\n"
      "a: Did you enjoy it?\nb: I loved the museums.";
  const auto v = classify_response(echo, mistral_rules());
  EXPECT_EQ(v.cls, VerdictClass::no_clear_response);
  EXPECT_EQ(v.matched_pattern, "a: & b:");
  // Only one speaker tag present: the group does not fire.
  EXPECT_EQ(classify_response("a: Have you been to Paris?", mistral_rules()).cls, VerdictClass::unparsed);
  // The vicuna_llama set has no such group.
  EXPECT_EQ(classify_response(echo, vicuna_llama_rules()).cls, VerdictClass::unparsed);
}

TEST(Verdict, PolarityBeatsNoClearGroup) {
  const auto v = classify_response("a: hi\nb: hi\nThere is no contradiction.", mistral_rules());
  EXPECT_EQ(v.cls, VerdictClass::non_contradictory);
}

TEST(Verdict, ConflictIsUnparsed) {
  const std::string text =
      "At first glance there is no contradiction, but on reflection the two turns contradict each other.";
  const auto v = classify_response(text, vicuna_llama_rules());
  EXPECT_EQ(v.cls, VerdictClass::unparsed);
  EXPECT_FALSE(v.matched_pattern.has_value());
}

TEST(Verdict, LongerOpposingPatternShadowsContainedOne) {
  const auto rules = vicuna_llama_rules();
  const auto v = classify_response("The dialogue does not contain a contradiction.", rules);
  EXPECT_EQ(v.cls, VerdictClass::non_contradictory);
  EXPECT_EQ(v.matched_pattern, "does not contain a contradiction");
  // A separate, unshadowed occurrence still counts.
  const auto both = classify_response(
      "The first half does not contain a contradiction. The second half does contain a contradiction.",
      rules);
  EXPECT_EQ(both.cls, VerdictClass::unparsed);
}

TEST(Verdict, MatchingIsCaseSensitive) {
  const auto rules = vicuna_llama_rules();
  EXPECT_EQ(classify_response("HERE IS A CONTRADICTION", rules).cls, VerdictClass::unparsed);
  EXPECT_EQ(classify_response("No contradiction found.", vicuna_llama_rules()).cls, VerdictClass::unparsed);
  EXPECT_EQ(classify_response("No contradiction found.", mistral_rules()).cls,
            VerdictClass::non_contradictory);
}

TEST(Verdict, CoverageHandCounts) {
  const auto rules = vicuna_llama_rules();
  const std::vector<std::string> texts{
      "Yes, there is a contradiction.",           // contradictory
      "No, there are no contradictions.",         // non_contradictory
      "I am not sure what you mean.",             // unparsed
      "They have different perspectives on it.",  // contradictory
      "Hmm.",                                     // unparsed
      "It does not contain a contradiction.",     // non_contradictory
      "no contradiction, yet they contradict each other",  // conflict
  };
  std::vector<Verdict> verdicts;
  for (const auto& t : texts) verdicts.push_back(classify_response(t, rules));
  EXPECT_EQ(coverage(verdicts), (Coverage{4, 7}));
  EXPECT_EQ(coverage({}), (Coverage{0, 0}));
}

TEST(Verdict, ParseLabel) {
  auto p = parse_label("Yes, b says two different things.");
  EXPECT_EQ(p.label, Label::yes);
  EXPECT_EQ(p.explanation, "b says two different things.");
  EXPECT_EQ(p.token, "Yes");

  p = parse_label("  no.");
  EXPECT_EQ(p.label, Label::no);
  EXPECT_TRUE(p.explanation.empty());
  EXPECT_TRUE(p.explanation_expected_empty);

  p = parse_label("YES: x");
  EXPECT_EQ(p.label, Label::yes);
  EXPECT_EQ(p.explanation, "x");

  EXPECT_EQ(parse_label("Yesterday I said so.").label, Label::unparsed);
  EXPECT_EQ(parse_label("Nothing to report.").label, Label::unparsed);
  EXPECT_EQ(parse_label("").label, Label::unparsed);
  EXPECT_EQ(parse_label("Maybe, yes.").label, Label::unparsed);

  EXPECT_EQ(verdict_from_label(parse_label("Yes")).cls, VerdictClass::contradictory);
  EXPECT_EQ(verdict_from_label(parse_label("No")).cls, VerdictClass::non_contradictory);
  EXPECT_EQ(verdict_from_label(parse_label("Perhaps")), (Verdict{VerdictClass::unparsed, std::nullopt}));
}

TEST(Verdict, RuleSetJsonRoundTrip) {
  for (const auto& name : {"vicuna_llama", "mistral"}) {
    const auto r = bundled_rule_set(name);
    const auto back = rule_set_from_json(json::parse(rule_set_to_json(r).dump()));
    EXPECT_EQ(back.name, r.name);
    EXPECT_EQ(back.contradictory, r.contradictory);
    EXPECT_EQ(back.non_contradictory, r.non_contradictory);
    EXPECT_EQ(back.no_clear_all_of, r.no_clear_all_of);
  }
}

TEST(Verdict, RuleSetErrors) {
  EXPECT_THROW(bundled_rule_set("gpt"), ConfigError);
  EXPECT_THROW(rule_set_from_json(json::parse(R"({"name":"x","contradictory":["a"]})")), ConfigError);
  EXPECT_THROW(rule_set_from_json(json::parse(R"({"name":"x","contradictory":[],"non_contradictory":["b"]})")),
               ConfigError);
  EXPECT_THROW(rule_set_from_json(json::parse(R"({"name":"x","contradictory":[""],"non_contradictory":["b"]})")),
               ConfigError);
  EXPECT_THROW(
      rule_set_from_json(json::parse(R"({"name":"x","contradictory":["a"],"non_contradictory":["b"],"extra":1})")),
      ConfigError);
  EXPECT_THROW(load_rule_set("/nonexistent/rules.json"), ConfigError);
}

TEST(Verdict, LoadRuleSetFromFile) {
  fixtures::TempDir dir;
  const auto path = dir.file("rules.json");
  std::ofstream(path) << R"({"name":"custom","contradictory":["CONTRA"],"non_contradictory":["FINE"]})";
  const auto r = load_rule_set(path);
  EXPECT_EQ(r.name, "custom");
  EXPECT_EQ(classify_response("this is CONTRA", r).cls, VerdictClass::contradictory);
}

// Random texts built from pattern fragments, so matches are frequent.
std::string random_text(std::mt19937& rng) {
  static const std::vector<std::string> pieces{
      "here is a contradiction", "no contradiction", "does not contain a contradiction",
      "contain a contradiction", "any contradictions", "contradict each other", "a:", "b:",
      "the dialogue", "is fine", "Yes,", "No,", "maybe", "CONTRA", "FINE"};
  std::uniform_int_distribution<std::size_t> len(0, 5), pick(0, pieces.size() - 1);
  std::string out;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + pieces[pick(rng)];
  return out;
}

bool polarity_conflict(const std::string& t, const RuleSet& r) {
  return detail::first_live_match(t, r.contradictory, r.non_contradictory) &&
         detail::first_live_match(t, r.non_contradictory, r.contradictory);
}

// Adding a no-clear group never loses coverage. Adding a polarity pattern
// only loses coverage on a text when that text now fires both classes.
TEST(Verdict, AddingPatternsNeverDecreasesCoverage) {
  std::mt19937 rng(7);
  static const std::vector<std::string> extra{"CONTRA", "FINE", "maybe", "is fine", "the dialogue",
                                              "contradiction", "a:"};
  std::uniform_int_distribution<std::size_t> pick(0, extra.size() - 1), which(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto base = trial % 2 ? vicuna_llama_rules() : mistral_rules();
    std::vector<std::string> texts;
    for (int i = 0; i < 40; ++i) texts.push_back(random_text(rng));
    auto grown = base;
    const auto add = extra[pick(rng)];
    const auto slot = which(rng);
    if (slot == 0) grown.contradictory.push_back(add);
    if (slot == 1) grown.non_contradictory.push_back(add);
    if (slot == 2) grown.no_clear_all_of.push_back({add});

    std::vector<Verdict> before, after;
    for (const auto& t : texts) {
      const auto b = classify_response(t, base);
      const auto a = classify_response(t, grown);
      before.push_back(b);
      after.push_back(a);
      if (b.cls != VerdictClass::unparsed && a.cls == VerdictClass::unparsed) {
        ASSERT_NE(slot, 2u) << t;
        EXPECT_TRUE(polarity_conflict(t, grown)) << t;
      }
    }
    if (slot == 2) EXPECT_GE(coverage(after).covered, coverage(before).covered);
  }
}

TEST(Verdict, ClassificationIsPure) {
  const auto rules = mistral_rules();
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto t = random_text(rng);
    EXPECT_EQ(classify_response(t, rules), classify_response(t, rules));
    const auto v = classify_response(t, rules);
    EXPECT_EQ(v.cls == VerdictClass::unparsed, !v.matched_pattern.has_value());
  }
}

}  // namespace
