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

// Prompt rendering. Every prompt is a pure function of its inputs and the
// active TemplateSet; dialogues are rendered as `<role>: <text>` lines.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/text.hpp"

namespace contradial {

enum class PromptTask { detect, detect_explain, modify_direct, modify_joint, collect };

inline std::string_view to_string(PromptTask t) {
  switch (t) {
    case PromptTask::detect: return "detect";
    case PromptTask::detect_explain: return "detect_explain";
    case PromptTask::modify_direct: return "modify_direct";
    case PromptTask::modify_joint: return "modify_joint";
    case PromptTask::collect: return "collect";
  }
  return "?";
}

enum class ShotMode { zero_shot, few_shot };
enum class EditStrategy { direct, joint };

inline std::string_view to_string(EditStrategy s) {
  return s == EditStrategy::direct ? "direct" : "joint";
}

struct PromptTemplate {
  PromptTask task = PromptTask::detect;
  std::string instruction;
  std::size_t demo_slots = 0;
};

struct RenderedPrompt {
  PromptTask task = PromptTask::detect;
  std::string text;
  std::string source_dialogue_id;
  bool uses_explanation = false;
};

/// The frozen prompt texts, keyed by name. Overrides may replace any entry
/// but not introduce new keys.
class TemplateSet {
 public:
  TemplateSet() {
    const std::string judge =
        "Please judge whether there are contradictions in the following dialogue";
    const std::string point_out = ", and point out these contradictions";
    const std::string gamma =
        "There are two conversations containing self-contradictions: alpha and beta. "
        "Please judge whether there are contradictions in the conversation gamma";
    const std::string revise =
        "Please revise the following contradictory dialogue to make it non-contradictory";
    const std::string direct_tail =
        "revise only the last contradictory utterance. "
        "Reply with only the new text of {target}.";
    const std::string joint_tail =
        "all contradictory utterances and related context should be revised. "
        "Reply with the complete revised dialogue, one \"role: text\" line per "
        "utterance, keeping the same number of utterances and the same speaker order.";

    set("detect_zero_shot", PromptTask::detect, judge + ".\n{dialogue}", 0);
    set("detect_explain_zero_shot", PromptTask::detect_explain,
        judge + point_out + ".\n{dialogue}", 0);
    set("detect_few_shot", PromptTask::detect,
        "{demos}\n\n" + gamma + ".\nConversation gamma:\n{dialogue}", 2);
    set("detect_explain_few_shot", PromptTask::detect_explain,
        "{demos}\n\n" + gamma + point_out + ".\nConversation gamma:\n{dialogue}", 2);
    set("modify_direct", PromptTask::modify_direct,
        revise + "; " + direct_tail + "\nDialogue:\n{dialogue}", 0);
    set("modify_direct_explained", PromptTask::modify_direct,
        revise + " according to the explanation; " + direct_tail +
            "\nExplanation:\n{explanation}\nDialogue:\n{dialogue}",
        0);
    set("modify_joint", PromptTask::modify_joint,
        revise + "; " + joint_tail + "\nDialogue:\n{dialogue}", 0);
    set("modify_joint_explained", PromptTask::modify_joint,
        revise + " according to the explanation; " + joint_tail +
            "\nExplanation:\n{explanation}\nDialogue:\n{dialogue}",
        0);
    // Original wording; no published generation prompt exists.
    set("collect", PromptTask::collect,
        "Write a casual everyday conversation about \"{topic}\" ({category}) between "
        "two speakers, a and b, with at least 4 alternating turns starting with a. "
        "Write one line per turn in the form \"a: text\" or \"b: text\". Speaker b "
        "must contradict something b said earlier in the conversation. After the "
        "conversation, write a line \"Explanation:\" followed by one or two sentences "
        "stating which utterances of b contradict each other and why.",
        0);
  }

  const PromptTemplate& get(const std::string& key) const {
    auto it = templates_.find(key);
    if (it == templates_.end()) throw ConfigError("unknown template '" + key + "'");
    return it->second;
  }

  void override_instruction(const std::string& key, std::string instruction) {
    auto it = templates_.find(key);
    if (it == templates_.end()) throw ConfigError("unknown template '" + key + "'");
    if (text::trim(instruction).empty())
      throw ConfigError("template '" + key + "' must be non-empty");
    it->second.instruction = std::move(instruction);
  }

  const std::map<std::string, PromptTemplate>& all() const { return templates_; }

 private:
  void set(const std::string& key, PromptTask task, std::string instruction,
           std::size_t demo_slots) {
    templates_[key] = PromptTemplate{task, std::move(instruction), demo_slots};
  }

  std::map<std::string, PromptTemplate> templates_;
};

/// First speaker becomes `a`, the other `b`. Idempotent.
inline LabeledDialogue anonymize_roles(const LabeledDialogue& dialogue) {
  LabeledDialogue out = dialogue;
  if (out.utterances.empty()) return out;
  const Role first = out.utterances.front().role;
  for (auto& u : out.utterances) u.role = u.role == first ? Role::a : Role::b;
  return out;
}

inline std::string render_line(Role role, std::string_view utterance_text) {
  std::string line(to_string(role));
  line += ": ";
  for (char c : utterance_text) line.push_back(c == '\n' || c == '\r' ? ' ' : c);
  return line;
}

inline std::string render_dialogue_block(const std::vector<Utterance>& utterances) {
  std::string out;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (i) out.push_back('\n');
    out += render_line(utterances[i].role, utterances[i].text);
  }
  return out;
}

struct ParsedLine {
  Role role;
  std::string text;

  bool operator==(const ParsedLine&) const = default;
};

/// Inverse of render_dialogue_block. Blank lines are skipped; any other line
/// not of the form `<role>: <text>` makes the whole block unparseable.
inline std::optional<std::vector<ParsedLine>> parse_dialogue_block(std::string_view block) {
  std::vector<ParsedLine> out;
  for (auto raw : text::split_lines(block)) {
    auto line = text::trim(raw);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto role = parse_role(text::to_lower(text::trim(line.substr(0, colon))));
    if (!role) return std::nullopt;
    auto body = text::trim(line.substr(colon + 1));
    if (body.empty()) return std::nullopt;
    out.push_back({*role, std::string(body)});
  }
  return out;
}

/// Index of the utterance a Direct Edit replaces: the last annotated
/// contradictory index, else the last utterance of the second speaker.
inline std::size_t edit_target_index(const LabeledDialogue& d) {
  if (d.annotation.utterance_indices && !d.annotation.utterance_indices->empty())
    return d.annotation.utterance_indices->back();
  if (d.utterances.size() < 2) return d.utterances.empty() ? 0 : d.utterances.size() - 1;
  const Role second = d.utterances[1].role;
  for (std::size_t i = d.utterances.size(); i-- > 0;)
    if (d.utterances[i].role == second) return i;
  return d.utterances.size() - 1;
}

namespace detail {

inline std::string fill(const std::string& tmpl,
                        const std::map<std::string, std::string, std::less<>>& vars) {
  return text::substitute(tmpl, [&](std::string_view key) -> const std::string* {
    auto it = vars.find(key);
    return it == vars.end() ? nullptr : &it->second;
  });
}

}  // namespace detail

inline RenderedPrompt render_detection_prompt(const LabeledDialogue& dialogue, ShotMode mode,
                                              const std::vector<LabeledDialogue>& demos,
                                              bool with_explanation,
                                              const TemplateSet& templates = {}) {
  std::string key = with_explanation ? "detect_explain_" : "detect_";
  key += mode == ShotMode::zero_shot ? "zero_shot" : "few_shot";
  const auto& tmpl = templates.get(key);
  if (demos.size() != tmpl.demo_slots)
    throw DemoCountMismatch("expected " + std::to_string(tmpl.demo_slots) + " demos, got " +
                            std::to_string(demos.size()));
  std::map<std::string, std::string, std::less<>> vars;
  vars["dialogue"] = render_dialogue_block(anonymize_roles(dialogue).utterances);
  if (mode == ShotMode::few_shot) {
    static const char* kNames[] = {"alpha", "beta"};
    std::string block;
    for (std::size_t i = 0; i < demos.size(); ++i) {
      if (!demos[i].annotation.label)
        throw DemoCountMismatch("few-shot demo '" + demos[i].id + "' is not contradictory");
      if (i) block += "\n\n";
      block += "Conversation ";
      block += kNames[i];
      block += ":\n";
      block += render_dialogue_block(anonymize_roles(demos[i]).utterances);
    }
    vars["demos"] = std::move(block);
  }
  return RenderedPrompt{tmpl.task, detail::fill(tmpl.instruction, vars), dialogue.id,
                        false};
}

inline RenderedPrompt render_modification_prompt(const LabeledDialogue& dialogue,
                                                 EditStrategy strategy,
                                                 const std::optional<std::string>& explanation,
                                                 const TemplateSet& templates = {}) {
  if (!dialogue.annotation.label)
    throw NotContradictory("dialogue '" + dialogue.id + "' is not annotated contradictory");
  std::string key = strategy == EditStrategy::direct ? "modify_direct" : "modify_joint";
  if (explanation) key += "_explained";
  const auto& tmpl = templates.get(key);
  const auto anon = anonymize_roles(dialogue);
  std::map<std::string, std::string, std::less<>> vars;
  vars["dialogue"] = render_dialogue_block(anon.utterances);
  if (explanation) vars["explanation"] = std::string(text::trim(*explanation));
  if (strategy == EditStrategy::direct) {
    const auto idx = edit_target_index(dialogue);
    vars["target"] = "utterance " + std::to_string(idx + 1) + " (spoken by " +
                     std::string(to_string(anon.utterances.at(idx).role)) + ")";
  }
  return RenderedPrompt{tmpl.task, detail::fill(tmpl.instruction, vars), dialogue.id,
                        explanation.has_value()};
}

inline RenderedPrompt render_collect_prompt(const std::string& topic, const std::string& category,
                                            const TemplateSet& templates = {}) {
  std::map<std::string, std::string, std::less<>> vars{{"topic", topic},
                                                       {"category", category}};
  return RenderedPrompt{PromptTask::collect,
                        detail::fill(templates.get("collect").instruction, vars), "", false};
}

}  // namespace contradial
