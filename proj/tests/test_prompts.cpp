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

#include "contradial/prompts.hpp"

#include <random>

#include <gtest/gtest.h>

#include "toy_fixtures.hpp"

namespace contradial {
namespace {

LabeledDialogue human_machine(Role first) {
  const Role second = first == Role::human ? Role::machine : Role::human;
  LabeledDialogue d;
  d.id = "hm";
  d.category = "Music";
  const char* texts[] = {"Have you ever listened to heavy metal?", "Not my style.",
                         "It is energetic.", "I love its energy."};
  for (std::size_t i = 0; i < 4; ++i) d.utterances.push_back({i, i % 2 ? second : first, texts[i]});
  d.annotation = {true, "b flips.", std::nullopt};
  return d;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

TEST(AnonymizeRoles, HumanFirst) {
  const auto out = anonymize_roles(human_machine(Role::human));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out.utterances[i].role, i % 2 ? Role::b : Role::a);
  EXPECT_EQ(out.utterances[0].text, "Have you ever listened to heavy metal?");
  EXPECT_EQ(render_dialogue_block(out.utterances).substr(0, 24), "a: Have you ever listene");
}

TEST(AnonymizeRoles, MachineFirstBecomesA) {
  const auto in = human_machine(Role::machine);
  const auto out = anonymize_roles(in);
  EXPECT_EQ(out.utterances[0].role, Role::a);
  EXPECT_EQ(out.utterances[1].role, Role::b);
}

TEST(AnonymizeRoles, IdempotentAndOtherFieldsUntouched) {
  const auto once = anonymize_roles(human_machine(Role::human));
  EXPECT_EQ(anonymize_roles(once), once);
  EXPECT_EQ(once.annotation, human_machine(Role::human).annotation);
  const auto toy = fixtures::toy()[0];
  EXPECT_EQ(anonymize_roles(toy), toy);
}

TEST(DetectionPrompt, ZeroShotStartsWithInstruction) {
  const auto d = fixtures::toy()[0];
  const auto p = render_detection_prompt(d, ShotMode::zero_shot, {}, false);
  EXPECT_EQ(p.text.rfind("Please judge whether there are contradictions in the following dialogue.\n", 0), 0u);
  EXPECT_EQ(p.source_dialogue_id, "toy-001");
  EXPECT_EQ(p.task, PromptTask::detect);
  EXPECT_EQ(count(p.text, d.utterances[0].text), 1u);
}

TEST(DetectionPrompt, ExplanationVariant) {
  const auto p = render_detection_prompt(fixtures::toy()[0], ShotMode::zero_shot, {}, true);
  EXPECT_NE(p.text.find("dialogue, and point out these contradictions.\n"), std::string::npos);
  EXPECT_EQ(p.task, PromptTask::detect_explain);
}

TEST(DetectionPrompt, FewShotNamesThreeConversations) {
  const auto c = fixtures::toy();
  const auto p = render_detection_prompt(c[1], ShotMode::few_shot, {c[0], c[2]}, false);
  EXPECT_NE(p.text.find("Conversation alpha:\n"), std::string::npos);
  EXPECT_NE(p.text.find("\n\nConversation beta:\n"), std::string::npos);
  EXPECT_NE(p.text.find("Conversation gamma:\n"), std::string::npos);
  EXPECT_NE(p.text.find("conversation gamma"), std::string::npos);
  EXPECT_EQ(count(p.text, c[1].utterances[0].text), 1u);
}

TEST(DetectionPrompt, DemoCountAndLabelChecked) {
  const auto c = fixtures::toy();
  EXPECT_THROW(render_detection_prompt(c[1], ShotMode::few_shot, {c[0]}, false), DemoCountMismatch);
  EXPECT_THROW(render_detection_prompt(c[1], ShotMode::few_shot, {c[0], c[3]}, false), DemoCountMismatch);
  EXPECT_THROW(render_detection_prompt(c[1], ShotMode::zero_shot, {c[0]}, false), DemoCountMismatch);
}

TEST(DetectionPrompt, Pure) {
  const auto d = fixtures::toy()[4];
  EXPECT_EQ(render_detection_prompt(d, ShotMode::zero_shot, {}, true).text,
            render_detection_prompt(d, ShotMode::zero_shot, {}, true).text);
}

TEST(ModificationPrompt, DirectWithoutExplanation) {
  const auto d = fixtures::toy()[0];
  const auto p = render_modification_prompt(d, EditStrategy::direct, std::nullopt);
  EXPECT_NE(p.text.find("revise only the last contradictory utterance"), std::string::npos);
  EXPECT_NE(p.text.find("utterance 4 (spoken by b)"), std::string::npos);
  EXPECT_EQ(p.text.find("Explanation:"), std::string::npos);
  EXPECT_FALSE(p.uses_explanation);
  EXPECT_EQ(count(p.text, d.utterances[3].text), 1u);
}

TEST(ModificationPrompt, JointWithExplanation) {
  const auto d = fixtures::toy()[0];
  const std::string e = "b reverses the stance on heavy metal.";
  const auto p = render_modification_prompt(d, EditStrategy::joint, e);
  EXPECT_NE(p.text.find("related context should be revised"), std::string::npos);
  EXPECT_NE(p.text.find("\nExplanation:\n" + e + "\n"), std::string::npos);
  EXPECT_TRUE(p.uses_explanation);
  EXPECT_EQ(p.task, PromptTask::modify_joint);
}

TEST(ModificationPrompt, RejectsNonContradictory) {
  EXPECT_THROW(render_modification_prompt(fixtures::toy()[1], EditStrategy::direct, std::nullopt),
               NotContradictory);
}

TEST(EditTarget, AnnotatedIndexElseLastSecondSpeakerTurn) {
  auto d = fixtures::toy()[0];
  d.annotation.utterance_indices = std::vector<std::size_t>{0, 2};
  EXPECT_EQ(edit_target_index(d), 2u);
  d.annotation.utterance_indices.reset();
  EXPECT_EQ(edit_target_index(d), 3u);
  d.utterances.push_back({4, Role::a, "One more."});
  EXPECT_EQ(edit_target_index(d), 3u);
}

TEST(Templates, OverrideAndUnknownKey) {
  TemplateSet t;
  t.override_instruction("detect_zero_shot", "Judge:\n{dialogue}");
  EXPECT_EQ(render_detection_prompt(fixtures::toy()[1], ShotMode::zero_shot, {}, false, t).text.substr(0, 9),
            "Judge:\na:");
  EXPECT_THROW(t.override_instruction("nope", "x"), ConfigError);
  EXPECT_THROW(t.override_instruction("collect", "  "), ConfigError);
}

TEST(CollectPrompt, FillsTopicAndCategory) {
  const auto p = render_collect_prompt("Phaal Curry", "Food");
  EXPECT_NE(p.text.find("\"Phaal Curry\" (Food)"), std::string::npos);
  EXPECT_NE(p.text.find("Explanation:"), std::string::npos);
}

TEST(DialogueBlock, RenderParseRoundTripProperty) {
  std::mt19937 rng(5);
  const std::string alphabet = "abc XYZ,.:;!?'\"-0123\xc3\xa9";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Utterance> us;
    const std::size_t n = 2 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      const std::size_t len = 1 + rng() % 30;
      for (std::size_t k = 0; k < len; ++k) t.push_back(alphabet[rng() % alphabet.size()]);
      t = std::string(text::trim(t));
      if (t.empty()) t = "x";
      us.push_back({i, i % 2 ? Role::b : Role::a, t});
    }
    const auto parsed = parse_dialogue_block(render_dialogue_block(us));
    ASSERT_TRUE(parsed.has_value());
    ASSERT_EQ(parsed->size(), us.size());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ((*parsed)[i].role, us[i].role);
      EXPECT_EQ((*parsed)[i].text, us[i].text);
    }
  }
}

TEST(DialogueBlock, ParseRejectsStrayLines) {
  EXPECT_FALSE(parse_dialogue_block("a: hi\nhello there\nb: yo").has_value());
  EXPECT_FALSE(parse_dialogue_block("c: hi").has_value());
  EXPECT_FALSE(parse_dialogue_block("a:   ").has_value());
  EXPECT_EQ(parse_dialogue_block("\na: hi\n\nB: yo\n")->size(), 2u);
}

}  // namespace
}  // namespace contradial
