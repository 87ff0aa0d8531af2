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

// Turning raw model text into contradiction verdicts, either with literal
// substring rule sets (for vanilla chat models) or by reading a leading
// Yes/No label (for instruction-tuned detectors).

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/text.hpp"

namespace contradial {

struct RuleSet {
  std::string name;
  std::vector<std::string> contradictory;
  std::vector<std::string> non_contradictory;
  /// Each group matches when every member occurs somewhere in the text.
  std::vector<std::vector<std::string>> no_clear_all_of;

  void validate() const {
    if (contradictory.empty() || non_contradictory.empty())
      throw ConfigError("rule set '" + name + "' needs patterns for both polarity classes");
    auto check = [&](const std::vector<std::string>& v) {
      for (const auto& p : v)
        if (p.empty()) throw ConfigError("rule set '" + name + "' has an empty pattern");
    };
    check(contradictory);
    check(non_contradictory);
    for (const auto& g : no_clear_all_of) {
      if (g.empty()) throw ConfigError("rule set '" + name + "' has an empty no-clear group");
      check(g);
    }
  }
};

/// Criteria used for Vicuna-7B and LLaMA2-chat outputs.
inline RuleSet vicuna_llama_rules() {
  return RuleSet{"vicuna_llama",
                 {"here is a contradiction", "contain a contradiction",
                  "are a few contradictions", "contradict each other",
                  "have different perspectives"},
                 {"no contradiction", "does not contain a contradiction", "any contradictions"},
                 {}};
}

/// Criteria used for Mistral-7B outputs, including the echoed-dialogue case.
inline RuleSet mistral_rules() {
  return RuleSet{"mistral",
                 {"here is a contradiction", "here are contradictions", "full of contradictions",
                  "is inconsistent", "statement contradict", "contains a contradiction"},
                 {"No contradiction", "no contradiction", "not contradictory",
                  "does not contain a contradiction", "any contradictions"},
                 {{"a:", "b:"}}};
}

inline RuleSet bundled_rule_set(const std::string& name) {
  if (name == "vicuna_llama") return vicuna_llama_rules();
  if (name == "mistral") return mistral_rules();
  throw ConfigError("no bundled rule set named '" + name + "'");
}

inline RuleSet rule_set_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("rule set must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (k != "name" && k != "contradictory" && k != "non_contradictory" &&
        k != "no_clear_all_of")
      throw ConfigError("unknown rule-set key '" + k + "'");
  RuleSet r;
  try {
    r.name = j.at("name").get<std::string>();
    r.contradictory = j.at("contradictory").get<std::vector<std::string>>();
    r.non_contradictory = j.at("non_contradictory").get<std::vector<std::string>>();
    if (j.contains("no_clear_all_of"))
      r.no_clear_all_of = j["no_clear_all_of"].get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed rule set: ") + e.what());
  }
  r.validate();
  return r;
}

inline ordered_json rule_set_to_json(const RuleSet& r) {
  ordered_json j;
  j["name"] = r.name;
  j["contradictory"] = r.contradictory;
  j["non_contradictory"] = r.non_contradictory;
  if (!r.no_clear_all_of.empty()) j["no_clear_all_of"] = r.no_clear_all_of;
  return j;
}

/// A bundled name or a path to a rule-set JSON file.
inline RuleSet load_rule_set(const std::string& name_or_path) {
  if (name_or_path == "vicuna_llama" || name_or_path == "mistral")
    return bundled_rule_set(name_or_path);
  try {
    return rule_set_from_json(json::parse(read_file(name_or_path)));
  } catch (const json::exception& e) {
    throw ConfigError(name_or_path + ": " + e.what());
  }
}

enum class VerdictClass { contradictory, non_contradictory, no_clear_response, unparsed };

inline std::string_view to_string(VerdictClass c) {
  switch (c) {
    case VerdictClass::contradictory: return "contradictory";
    case VerdictClass::non_contradictory: return "non_contradictory";
    case VerdictClass::no_clear_response: return "no_clear_response";
    case VerdictClass::unparsed: return "unparsed";
  }
  return "?";
}

inline std::optional<VerdictClass> parse_verdict_class(std::string_view s) {
  for (auto c : {VerdictClass::contradictory, VerdictClass::non_contradictory,
                 VerdictClass::no_clear_response, VerdictClass::unparsed})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct Verdict {
  VerdictClass cls = VerdictClass::unparsed;
  std::optional<std::string> matched_pattern;  // present iff cls != unparsed

  bool operator==(const Verdict&) const = default;
};

namespace detail {

struct Span {
  std::size_t begin;
  std::size_t end;
};

inline std::vector<Span> occurrences(std::string_view hay, std::string_view needle) {
  std::vector<Span> out;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1))
    out.push_back({pos, pos + needle.size()});
  return out;
}

// First pattern with an occurrence not strictly inside a longer occurrence
// of an opposing pattern. This keeps "does not contain a contradiction"
// from also firing "contain a contradiction".
inline std::optional<std::string> first_live_match(std::string_view textv,
                                                   const std::vector<std::string>& mine,
                                                   const std::vector<std::string>& theirs) {
  std::vector<Span> opposing;
  for (const auto& p : theirs)
    for (auto s : occurrences(textv, p)) opposing.push_back(s);
  for (const auto& p : mine) {
    for (auto s : occurrences(textv, p)) {
      bool shadowed = false;
      for (auto o : opposing) {
        if (o.begin <= s.begin && s.end <= o.end && (o.end - o.begin) > (s.end - s.begin)) {
          shadowed = true;
          break;
        }
      }
      if (!shadowed) return p;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Case-sensitive literal containment. Contradictory patterns are checked,
/// then non-contradictory ones, then no-clear groups; a text that fires both
/// polarity classes is unparsed.
inline Verdict classify_response(std::string_view response, const RuleSet& rules) {
  auto pos = detail::first_live_match(response, rules.contradictory, rules.non_contradictory);
  auto neg = detail::first_live_match(response, rules.non_contradictory, rules.contradictory);
  if (pos && neg) return {VerdictClass::unparsed, std::nullopt};
  if (pos) return {VerdictClass::contradictory, std::move(pos)};
  if (neg) return {VerdictClass::non_contradictory, std::move(neg)};
  for (const auto& group : rules.no_clear_all_of) {
    bool all = true;
    for (const auto& p : group) all = all && response.find(p) != std::string_view::npos;
    if (all) {
      std::string joined;
      for (std::size_t i = 0; i < group.size(); ++i) joined += (i ? " & " : "") + group[i];
      return {VerdictClass::no_clear_response, joined};
    }
  }
  return {VerdictClass::unparsed, std::nullopt};
}

enum class Label { yes, no, unparsed };

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::yes: return "yes";
    case Label::no: return "no";
    case Label::unparsed: return "unparsed";
  }
  return "?";
}

struct LabelParse {
  Label label = Label::unparsed;
  std::string explanation;
  /// A "no" answer should carry no explanation; whatever follows is kept
  /// verbatim but flagged.
  bool explanation_expected_empty = false;
  std::string token;  // the label token as written
};

/// Reads a leading "Yes"/"No" (any case) optionally followed by `,` `.` `:`;
/// the trimmed remainder is the explanation.
inline LabelParse parse_label(std::string_view response) {
  auto s = text::trim(response);
  auto try_token = [&](std::string_view word) -> bool {
    if (s.size() < word.size()) return false;
    if (text::to_lower(s.substr(0, word.size())) != word) return false;
    if (s.size() == word.size()) return true;
    char next = s[word.size()];
    return next == ',' || next == '.' || next == ':' || next == ' ' || next == '\t' ||
           next == '\n' || next == '\r' || next == '!';
  };
  LabelParse out;
  std::size_t consumed = 0;
  if (try_token("yes")) {
    out.label = Label::yes;
    consumed = 3;
  } else if (try_token("no")) {
    out.label = Label::no;
    out.explanation_expected_empty = true;
    consumed = 2;
  } else {
    return out;
  }
  out.token = std::string(s.substr(0, consumed));
  auto rest = s.substr(consumed);
  if (!rest.empty() && (rest[0] == ',' || rest[0] == '.' || rest[0] == ':' || rest[0] == '!'))
    rest.remove_prefix(1);
  out.explanation = std::string(text::trim(rest));
  return out;
}

inline Verdict verdict_from_label(const LabelParse& p) {
  switch (p.label) {
    case Label::yes: return {VerdictClass::contradictory, p.token};
    case Label::no: return {VerdictClass::non_contradictory, p.token};
    case Label::unparsed: break;
  }
  return {VerdictClass::unparsed, std::nullopt};
}

struct Coverage {
  std::size_t covered = 0;
  std::size_t total = 0;

  bool operator==(const Coverage&) const = default;
};

inline Coverage coverage(const std::vector<Verdict>& verdicts) {
  Coverage c{0, verdicts.size()};
  for (const auto& v : verdicts) c.covered += v.cls != VerdictClass::unparsed ? 1 : 0;
  return c;
}

}  // namespace contradial
