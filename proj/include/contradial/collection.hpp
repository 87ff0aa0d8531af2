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

// Synthetic contradictory-dialogue collection: topic keywords in, a
// generate -> validate -> accept loop, validated records out. Accepted
// records are also routed to the human-review annotation queue.

#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "contradial/backend.hpp"
#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/prompts.hpp"
#include "contradial/text.hpp"
#include "contradial/verdict.hpp"

namespace contradial::collection {

inline constexpr std::size_t kDefaultMaxUses = 3;
inline constexpr double kDefaultDedupThreshold = 0.8;

struct TopicBudget {
  std::string keyword;
  std::string category;
  std::size_t uses = 0;
  std::size_t max_uses = kDefaultMaxUses;
  std::size_t attempts = 0;

  bool has_budget() const { return uses < max_uses; }
};

/// `category<TAB>keyword` per line; blank lines are skipped.
inline std::vector<TopicBudget> parse_topics(std::string_view content,
                                             std::size_t max_uses = kDefaultMaxUses) {
  std::vector<TopicBudget> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw MalformedTopicLine("line " + std::to_string(line_no) + ": missing tab");
    auto category = text::trim(line.substr(0, tab));
    auto keyword = text::trim(line.substr(tab + 1));
    if (category.empty() || keyword.empty())
      throw MalformedTopicLine("line " + std::to_string(line_no) + ": empty field");
    out.push_back({std::string(keyword), std::string(category), 0, max_uses, 0});
  }
  return out;
}

inline std::vector<TopicBudget> load_topics(const std::string& path,
                                            std::size_t max_uses = kDefaultMaxUses) {
  return parse_topics(read_file(path), max_uses);
}

struct Check {
  bool pass = false;
  std::string reason;
};

struct Verdicts {
  std::optional<Check> format;
  std::optional<Check> dedup;
  std::optional<Check> parser;
  double max_jaccard = 0.0;
  std::string nearest_id;

  bool all_pass() const {
    return format && format->pass && dedup && dedup->pass && parser && parser->pass;
  }
};

struct GenerationCandidate {
  std::string topic;
  std::string category;
  std::string raw;
  std::vector<Utterance> utterances;
  std::string explanation;
  Verdicts verdicts;
};

/// Splits a reply at its `Explanation:` line: role lines before, the
/// explanation after (text on the marker line included).
inline GenerationCandidate parse_candidate(std::string raw, const TopicBudget& topic) {
  static constexpr std::string_view kMarker = "Explanation:";
  GenerationCandidate c;
  c.topic = topic.keyword;
  c.category = topic.category;
  const auto lines = text::split_lines(raw);
  std::size_t marker = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).substr(0, kMarker.size()) == kMarker) {
      marker = i;
      break;
    }
  }
  if (marker == lines.size()) throw ParseFailure("reply has no \"Explanation:\" line");
  std::string dialogue_part;
  for (std::size_t i = 0; i < marker; ++i) {
    dialogue_part += lines[i];
    dialogue_part += '\n';
  }
  auto parsed = parse_dialogue_block(dialogue_part);
  if (!parsed || parsed->empty())
    throw ParseFailure("dialogue section is not a sequence of `role: text` lines");
  std::string expl(text::trim(lines[marker]).substr(kMarker.size()));
  for (std::size_t i = marker + 1; i < lines.size(); ++i) {
    expl += ' ';
    expl += lines[i];
  }
  c.explanation = std::string(text::trim(expl));
  LabeledDialogue tmp;
  for (std::size_t i = 0; i < parsed->size(); ++i)
    tmp.utterances.push_back({i, (*parsed)[i].role, (*parsed)[i].text});
  c.utterances = anonymize_roles(tmp).utterances;
  c.raw = std::move(raw);
  return c;
}

inline GenerationCandidate generate_candidate(const TopicBudget& topic, Backend& collector,
                                              const TemplateSet& templates = {},
                                              const GenParams& params = {}) {
  if (!topic.has_budget())
    throw BudgetExhausted("topic '" + topic.keyword + "' has no remaining budget");
  auto prompt = render_collect_prompt(topic.keyword, topic.category, templates);
  auto completion = collector.complete(prompt, params);
  return parse_candidate(std::move(completion.text), topic);
}

inline std::set<std::string> unigram_set(const std::vector<Utterance>& utterances) {
  std::set<std::string> out;
  for (const auto& u : utterances)
    for (auto& t : text::tokenize(u.text)) out.insert(std::move(t));
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

struct ValidationConfig {
  double dedup_threshold = kDefaultDedupThreshold;
  RuleSet parser_rules = vicuna_llama_rules();
};

inline GenerationCandidate validate_candidate(GenerationCandidate c, const Corpus& existing,
                                              const ValidationConfig& cfg = {}) {
  // format
  Check format{true, {}};
  if (c.utterances.size() < 4) {
    format = {false, "fewer than 4 utterances"};
  } else {
    for (std::size_t i = 0; i < c.utterances.size() && format.pass; ++i) {
      if (c.utterances[i].role != (i % 2 == 0 ? Role::a : Role::b))
        format = {false, "roles do not alternate"};
      else if (text::trim(c.utterances[i].text).empty())
        format = {false, "empty utterance"};
    }
  }
  if (format.pass) {
    const auto tokens = text::tokenize(c.explanation);
    if (tokens.empty()) {
      format = {false, "empty explanation"};
    } else if (std::none_of(tokens.begin(), tokens.end(),
                            [](const std::string& t) { return t == "a" || t == "b"; })) {
      format = {false, "explanation names no speaker"};
    }
  }
  c.verdicts.format = format;

  // dedup
  const auto mine = unigram_set(c.utterances);
  c.verdicts.max_jaccard = 0.0;
  c.verdicts.nearest_id.clear();
  for (const auto& d : existing) {
    const double jac = jaccard(mine, unigram_set(d.utterances));
    if (jac > c.verdicts.max_jaccard || c.verdicts.nearest_id.empty()) {
      if (jac >= c.verdicts.max_jaccard) {
        c.verdicts.max_jaccard = jac;
        c.verdicts.nearest_id = d.id;
      }
    }
  }
  if (c.verdicts.max_jaccard > cfg.dedup_threshold)
    c.verdicts.dedup = Check{false, "unigram Jaccard " + std::to_string(c.verdicts.max_jaccard) +
                                        " with " + c.verdicts.nearest_id};
  else
    c.verdicts.dedup = Check{true, {}};

  // parser
  const auto v = classify_response(c.explanation, cfg.parser_rules);
  c.verdicts.parser = v.cls == VerdictClass::non_contradictory
                          ? Check{false, "explanation reads as non-contradictory"}
                          : Check{true, {}};
  return c;
}

struct Rejection {
  std::string topic;
  std::string category;
  std::string stage;  // backend | parse | format | dedup | parser | schema
  std::string reason;
  std::optional<double> jaccard;
  std::string nearest_id;
  std::string raw;
};

inline ordered_json to_json(const Rejection& r) {
  ordered_json j;
  j["topic"] = r.topic;
  j["category"] = r.category;
  j["stage"] = r.stage;
  j["reason"] = r.reason;
  if (r.jaccard) {
    j["jaccard"] = *r.jaccard;
    j["nearest"] = r.nearest_id;
  }
  j["raw"] = r.raw;
  return j;
}

/// One human-review item per accepted dialogue.
struct QueueEntry {
  std::string item_id;
  LabeledDialogue dialogue;
};

inline ordered_json to_json(const QueueEntry& e) {
  ordered_json j;
  j["item_id"] = e.item_id;
  j["dialogue"] = dialogue_to_json(e.dialogue);
  j["candidate"] = e.dialogue.annotation.explanation;
  j["reference"] = "";
  return j;
}

struct CollectionResult {
  Corpus accepted;
  std::vector<Rejection> rejections;
  std::vector<QueueEntry> queue;
};

class BudgetsExhausted : public Error {
 public:
  explicit BudgetsExhausted(CollectionResult partial)
      : Error("BudgetsExhausted", "topic budgets exhausted after " +
                                      std::to_string(partial.accepted.size()) + " accepted"),
        partial_(std::move(partial)) {}

  std::size_t accepted_so_far() const { return partial_.accepted.size(); }
  const CollectionResult& partial() const { return partial_; }

 private:
  CollectionResult partial_;
};

struct CollectionConfig {
  ValidationConfig validation;
  TemplateSet templates;
  GenParams params;
  CorpusOptions corpus_options;
  std::size_t parallelism = 1;
  /// Generation attempts allowed per topic, as a multiple of max_uses.
  std::size_t attempts_per_use = 3;
  std::string id_prefix = "syn-";
};

/// Generates until `target` dialogues are accepted. Generation runs in
/// parallel rounds of distinct topics; acceptance and budget accounting run
/// serially in topic order, so budgets stay exact. Throws BudgetsExhausted
/// (carrying everything accepted so far) when no topic can generate.
inline CollectionResult collect(std::vector<TopicBudget>& topics, Backend& collector,
                                std::size_t target, const Corpus& existing,
                                const CollectionConfig& cfg = {}) {
  if (target < 1) throw ConfigError("target_count must be >= 1");
  CollectionResult result;
  Corpus seen = existing;
  std::unordered_set<std::string> ids;
  for (const auto& d : existing) ids.insert(d.id);
  std::size_t next_serial = existing.size() + 1;
  auto fresh_id = [&] {
    for (;;) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%06zu", next_serial++);
      auto id = cfg.id_prefix + buf;
      if (ids.insert(id).second) return id;
    }
  };
  auto available = [&](const TopicBudget& t) {
    return t.has_budget() && t.attempts < t.max_uses * cfg.attempts_per_use;
  };

  std::size_t cursor = 0;
  while (result.accepted.size() < target) {
    std::vector<std::size_t> round;
    for (std::size_t k = 0; k < topics.size() && round.size() < cfg.parallelism; ++k) {
      const auto i = (cursor + k) % topics.size();
      if (available(topics[i])) round.push_back(i);
    }
    if (round.empty()) throw BudgetsExhausted(std::move(result));
    cursor = (round.back() + 1) % topics.size();

    std::vector<RenderedPrompt> prompts;
    for (auto i : round)
      prompts.push_back(render_collect_prompt(topics[i].keyword, topics[i].category, cfg.templates));
    auto outcomes = complete_batch(collector, prompts, cfg.params, std::max<std::size_t>(1, cfg.parallelism),
                                   std::max<std::size_t>(64, cfg.parallelism));

    for (std::size_t k = 0; k < round.size(); ++k) {
      auto& topic = topics[round[k]];
      ++topic.attempts;
      Rejection rej{topic.keyword, topic.category, {}, {}, std::nullopt, {}, {}};
      const auto* completion = std::get_if<Completion>(&outcomes[k]);
      if (!completion) {
        const auto& f = std::get<BackendFailure>(outcomes[k]);
        rej.stage = "backend";
        rej.reason = f.kind + ": " + f.message;
        result.rejections.push_back(std::move(rej));
        continue;
      }
      rej.raw = completion->text;
      GenerationCandidate cand;
      try {
        cand = parse_candidate(completion->text, topic);
      } catch (const ParseFailure& e) {
        rej.stage = "parse";
        rej.reason = e.what();
        result.rejections.push_back(std::move(rej));
        continue;
      }
      cand = validate_candidate(std::move(cand), seen, cfg.validation);
      const auto& v = cand.verdicts;
      if (!v.format->pass) {
        rej.stage = "format";
        rej.reason = v.format->reason;
      } else if (!v.dedup->pass) {
        rej.stage = "dedup";
        rej.reason = v.dedup->reason;
        rej.jaccard = v.max_jaccard;
        rej.nearest_id = v.nearest_id;
      } else if (!v.parser->pass) {
        rej.stage = "parser";
        rej.reason = v.parser->reason;
      }
      if (!rej.stage.empty()) {
        result.rejections.push_back(std::move(rej));
        continue;
      }
      if (result.accepted.size() >= target || !topic.has_budget()) continue;

      LabeledDialogue d;
      d.category = topic.category;
      d.topic_keyword = topic.keyword;
      d.source = Source::synthetic;
      d.utterances = cand.utterances;
      d.annotation.label = true;
      d.annotation.explanation = cand.explanation;
      d.id = fresh_id();
      try {
        validate_dialogue(d, cfg.corpus_options);
      } catch (const InvariantViolation& e) {
        ids.erase(d.id);
        rej.stage = "schema";
        rej.reason = e.what();
        result.rejections.push_back(std::move(rej));
        continue;
      }
      ++topic.uses;
      seen.push_back(d);
      result.queue.push_back({"review-" + d.id, d});
      result.accepted.push_back(std::move(d));
    }
  }
  return result;
}

}  // namespace contradial::collection
