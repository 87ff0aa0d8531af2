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

// Scripted mock fixtures over the bundled toy corpus. Every script keys its
// answers by prompt digest, so runs are order-independent.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "contradial/backend.hpp"
#include "contradial/corpus.hpp"
#include "contradial/pipeline.hpp"
#include "contradial/prompts.hpp"
#include "contradial/scoring.hpp"

namespace fixtures {

using namespace contradial;

inline const char* kYes = "Yes, there is a contradiction in the dialogue.";
inline const char* kNo = "No, there are no contradictions in the dialogue.";

inline std::string data_path(const std::string& name) { return std::string(CONTRADIAL_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) {
  return std::string(CONTRADIAL_FIXTURE_DIR) + "/" + name;
}

inline Corpus toy() { return load_corpus(data_path("toy.jsonl")); }

inline Corpus subset(const Corpus& c, std::size_t n) { return Corpus(c.begin(), c.begin() + static_cast<long>(n)); }

inline Corpus contradictory(const Corpus& c) {
  Corpus out;
  for (const auto& d : c)
    if (d.annotation.label) out.push_back(d);
  return out;
}

inline ScriptEntry digest_entry(const std::string& prompt, std::string response) {
  return {ScriptEntry::Match::digest, prompt_digest(prompt), std::move(response)};
}

/// Detection answers keyed by dialogue id, for the default zero-shot prompt.
inline std::vector<ScriptEntry> detection_script(const Corpus& corpus,
                                                 const std::map<std::string, std::string>& answers,
                                                 const pipeline::DetectionConfig& cfg = {}) {
  std::vector<ScriptEntry> out;
  for (const auto& d : corpus) {
    auto a = answers.find(d.id);
    if (a == answers.end()) continue;
    out.push_back(digest_entry(
        render_detection_prompt(d, cfg.mode, cfg.demos, cfg.with_explanation, cfg.templates).text,
        a->second));
  }
  return out;
}

/// Gold answers for every dialogue.
inline std::map<std::string, std::string> oracle_answers(const Corpus& corpus) {
  std::map<std::string, std::string> out;
  for (const auto& d : corpus) out[d.id] = d.annotation.label ? kYes : kNo;
  return out;
}

/// First ten toy dialogues: "Yes" for 4 of 5 contradictory, "No" for 3 of 5
/// consistent ones. tp 4, fn 1, fp 2, tn 3.
inline std::map<std::string, std::string> confusion_answers() {
  return {{"toy-001", kYes}, {"toy-003", kYes}, {"toy-005", kYes}, {"toy-007", kYes},
          {"toy-009", kNo},  {"toy-002", kNo},  {"toy-004", kNo},  {"toy-006", kNo},
          {"toy-008", kYes}, {"toy-010", kYes}};
}

/// Returns a preset s1 per candidate text; 0 for anything else.
class FixedScorer : public scoring::Scorer {
 public:
  explicit FixedScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
  double score(std::string_view candidate, std::string_view) const override {
    auto f = table_.find(std::string(candidate));
    return f == table_.end() ? 0.0 : f->second;
  }
  std::string name() const override { return "fixed"; }

 private:
  std::map<std::string, double> table_;
};

/// Four contradictory dialogues whose explanations score {0.70, 0.66, 0.64,
/// 0.50} under FixedScorer (with a zero second score).
struct FourScoreFixture {
  Corpus corpus;
  std::vector<ScriptEntry> script;
  std::shared_ptr<FixedScorer> s1;
  std::shared_ptr<FixedScorer> s2;
};

inline FourScoreFixture four_score_fixture() {
  FourScoreFixture f;
  f.corpus = subset(contradictory(toy()), 4);
  const std::vector<double> scores{0.70, 0.66, 0.64, 0.50};
  std::map<std::string, double> table;
  for (std::size_t i = 0; i < f.corpus.size(); ++i) {
    const auto expl = "b contradicts an earlier turn, variant " + std::to_string(i) + ".";
    table[expl] = scores[i];
    f.script.push_back(digest_entry(
        render_detection_prompt(f.corpus[i], ShotMode::zero_shot, {}, true).text, "Yes, " + expl));
  }
  f.s1 = std::make_shared<FixedScorer>(table);
  f.s2 = std::make_shared<FixedScorer>(std::map<std::string, double>{});
  return f;
}

/// Full toy corpus. Before edits the detector flags exactly the 10
/// contradictory dialogues; the red team's Direct Edit fixes 8 of them, so 2
/// stay flagged afterwards. Baseline 50%, residual 10%.
struct ModificationFixture {
  Corpus corpus;
  std::vector<ScriptEntry> red_team;
  std::vector<ScriptEntry> detector;
  std::set<std::string> unfixed;
};

inline ModificationFixture modification_fixture(EditStrategy strategy = EditStrategy::direct) {
  ModificationFixture f;
  f.corpus = toy();
  f.detector = detection_script(f.corpus, oracle_answers(f.corpus));
  std::size_t k = 0;
  for (const auto& d : f.corpus) {
    if (!d.annotation.label) continue;
    const bool fixed = k < 8;
    if (!fixed) f.unfixed.insert(d.id);
    const auto target = edit_target_index(d);
    const std::string replacement =
        "I see your point, but I prefer a calmer view on this (" + d.id + ").";
    std::string reply;
    LabeledDialogue edited = d;
    if (strategy == EditStrategy::direct) {
      reply = replacement;
      edited = pipeline::splice_utterance(d, target, replacement);
    } else {
      edited = pipeline::splice_utterance(d, target, replacement);
      reply = render_dialogue_block(anonymize_roles(edited).utterances);
    }
    f.red_team.push_back(digest_entry(render_modification_prompt(d, strategy, std::nullopt).text, reply));
    f.detector.push_back(digest_entry(render_detection_prompt(edited, ShotMode::zero_shot, {}, false).text,
                                      fixed ? kNo : kYes));
    ++k;
  }
  return f;
}

inline void write_script(const std::string& path, const std::vector<ScriptEntry>& script) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const auto& e : script) out << script_line(e) << '\n';
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("contradial-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace fixtures
