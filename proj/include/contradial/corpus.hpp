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

// Contradictory-dialogue corpora: data model, the line-delimited JSON
// storage format, stratified splitting and descriptive statistics.
//
// One record per line:
//   {"id": str, "category": str, "topic": str,
//    "source": "synthetic"|"external",
//    "utterances": [{"role": "a"|"b", "text": str}, ...],
//    "contradiction": bool, "explanation": str, "indices": [int, ...]?}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "contradial/errors.hpp"
#include "contradial/text.hpp"
#include "json.hpp"

namespace contradial {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class Role { a, b, human, machine };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::a: return "a";
    case Role::b: return "b";
    case Role::human: return "human";
    case Role::machine: return "machine";
  }
  return "?";
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "a") return Role::a;
  if (s == "b") return Role::b;
  if (s == "human") return Role::human;
  if (s == "machine") return Role::machine;
  return std::nullopt;
}

struct Utterance {
  std::size_t index = 0;
  Role role = Role::a;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

struct ContradictionAnnotation {
  bool label = false;
  std::string explanation;  // empty iff !label
  std::optional<std::vector<std::size_t>> utterance_indices;

  bool operator==(const ContradictionAnnotation&) const = default;
};

enum class Source { synthetic, external };

inline std::string_view to_string(Source s) {
  return s == Source::synthetic ? "synthetic" : "external";
}

struct LabeledDialogue {
  std::string id;
  std::string category;
  std::string topic_keyword;
  Source source = Source::external;
  std::vector<Utterance> utterances;
  ContradictionAnnotation annotation;

  bool operator==(const LabeledDialogue&) const = default;
};

using Corpus = std::vector<LabeledDialogue>;

/// Daily-conversation topic categories accepted by default.
inline const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> kCategories = {
      "Movies",    "Music",      "Food",     "Travel",    "Sports",
      "Books",     "Technology", "Health",   "Education", "Shopping",
      "Work",      "Family",     "Pets",     "Weather",   "Art",
      "Science"};
  return kCategories;
}

struct CorpusOptions {
  /// Empty disables the category check.
  std::vector<std::string> categories = default_categories();
};

/// Throws InvariantViolation naming the first rule the dialogue breaks.
inline void validate_dialogue(const LabeledDialogue& d,
                              const CorpusOptions& opts = {}) {
  auto fail = [&](const std::string& rule) {
    throw InvariantViolation(d.id + ": " + rule);
  };
  if (d.id.empty()) fail("id must be non-empty");
  if (!opts.categories.empty()) {
    auto lc = text::to_lower(d.category);
    bool known = std::any_of(
        opts.categories.begin(), opts.categories.end(),
        [&](const std::string& c) { return text::to_lower(c) == lc; });
    if (!known) fail("unknown category '" + d.category + "'");
  }
  if (d.utterances.size() < 2) fail("fewer than 2 utterances");
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    const auto& u = d.utterances[i];
    if (u.index != i) fail("utterance indices must be 0..n-1");
    if (text::trim(u.text).empty()) fail("empty utterance text");
  }
  const Role first = d.utterances[0].role;
  const Role second = d.utterances[1].role;
  if (first == second) fail("roles must alternate");
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    if (d.utterances[i].role != (i % 2 == 0 ? first : second))
      fail("roles must alternate");
  }
  const auto& ann = d.annotation;
  if (!ann.label) {
    if (!ann.explanation.empty())
      fail("non-contradictory dialogue carries an explanation");
    if (ann.utterance_indices) fail("non-contradictory dialogue carries indices");
  } else {
    if (text::trim(ann.explanation).empty())
      fail("contradictory dialogue without explanation");
    if (ann.utterance_indices) {
      const auto& idx = *ann.utterance_indices;
      if (idx.size() < 2) fail("indices need at least 2 entries");
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= d.utterances.size()) fail("index beyond dialogue length");
        if (i > 0 && idx[i] <= idx[i - 1]) fail("indices must strictly increase");
      }
    }
  }
}

inline ordered_json dialogue_to_json(const LabeledDialogue& d) {
  ordered_json j;
  j["id"] = d.id;
  j["category"] = d.category;
  j["topic"] = d.topic_keyword;
  j["source"] = std::string(to_string(d.source));
  auto utts = ordered_json::array();
  for (const auto& u : d.utterances) {
    ordered_json uj;
    uj["role"] = std::string(to_string(u.role));
    uj["text"] = u.text;
    utts.push_back(std::move(uj));
  }
  j["utterances"] = std::move(utts);
  j["contradiction"] = d.annotation.label;
  j["explanation"] = d.annotation.explanation;
  if (d.annotation.utterance_indices) j["indices"] = *d.annotation.utterance_indices;
  return j;
}

/// Parses one record without checking dialogue invariants. Schema problems
/// throw std::invalid_argument; parse_corpus turns them into MalformedLine.
inline LabeledDialogue dialogue_from_json(const json& j) {
  static const std::set<std::string> kKeys = {
      "id", "category", "topic", "source", "utterances",
      "contradiction", "explanation", "indices"};
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw std::invalid_argument("unknown key '" + key + "'");
  }
  auto str = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing key '") + key + "'");
    if (!j[key].is_string())
      throw std::invalid_argument(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  LabeledDialogue d;
  d.id = str("id");
  d.category = str("category");
  d.topic_keyword = str("topic");
  auto src = str("source");
  if (src == "synthetic") {
    d.source = Source::synthetic;
  } else if (src == "external") {
    d.source = Source::external;
  } else {
    throw std::invalid_argument("bad source '" + src + "'");
  }
  if (!j.contains("utterances") || !j["utterances"].is_array())
    throw std::invalid_argument("'utterances' must be an array");
  std::size_t i = 0;
  for (const auto& uj : j["utterances"]) {
    if (!uj.is_object() || uj.size() != 2 || !uj.contains("role") ||
        !uj.contains("text") || !uj["role"].is_string() || !uj["text"].is_string())
      throw std::invalid_argument("utterance must be {\"role\": str, \"text\": str}");
    auto role = parse_role(uj["role"].get<std::string>());
    if (!role) throw std::invalid_argument("bad role '" + uj["role"].get<std::string>() + "'");
    d.utterances.push_back({i++, *role, uj["text"].get<std::string>()});
  }
  if (!j.contains("contradiction") || !j["contradiction"].is_boolean())
    throw std::invalid_argument("'contradiction' must be a boolean");
  d.annotation.label = j["contradiction"].get<bool>();
  d.annotation.explanation = str("explanation");
  if (j.contains("indices")) {
    const auto& ij = j["indices"];
    if (!ij.is_array()) throw std::invalid_argument("'indices' must be an array");
    std::vector<std::size_t> idx;
    for (const auto& v : ij) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw std::invalid_argument("'indices' must hold non-negative integers");
      idx.push_back(v.get<std::size_t>());
    }
    d.annotation.utterance_indices = std::move(idx);
  }
  return d;
}

/// Reads and validates a corpus from line-delimited JSON held in memory.
/// Blank lines are skipped; line numbers are 1-based.
inline Corpus parse_corpus(std::string_view content, const CorpusOptions& opts = {}) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    LabeledDialogue d;
    try {
      d = dialogue_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw MalformedLine(line_no, e.what());
    }
    if (!ids.insert(d.id).second) throw DuplicateId(d.id);
    validate_dialogue(d, opts);
    corpus.push_back(std::move(d));
  }
  return corpus;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Corpus load_corpus(const std::string& path, const CorpusOptions& opts = {}) {
  return parse_corpus(read_file(path), opts);
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus) {
    out += dialogue_to_json(d).dump();
    out += '\n';
  }
  return out;
}

inline void save_corpus(const std::string& path, const Corpus& corpus, bool append = false) {
  std::ofstream out(path, append ? std::ios::binary | std::ios::app : std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << serialize_corpus(corpus);
}

// ---------------------------------------------------------------------------
// Statistics

struct CorpusStats {
  std::size_t dialogue_count = 0;
  std::size_t contradictory_count = 0;
  double mean_words_per_dialogue = 0.0;
  double mean_sentences_per_dialogue = 0.0;
  double mean_words_per_utterance = 0.0;
  double mean_explanation_words = 0.0;
  std::map<std::string, std::size_t> category_histogram;
  double topic_reuse_fraction = 0.0;
};

/// Sentence count per dialogue is its utterance count. `reuse_limit` is the
/// K in "share of topic keywords used at most K times".
inline CorpusStats corpus_stats(const Corpus& corpus, std::size_t reuse_limit = 3) {
  CorpusStats s;
  s.dialogue_count = corpus.size();
  if (corpus.empty()) return s;
  std::size_t words = 0, utterances = 0, expl_words = 0;
  std::map<std::string, std::size_t> topic_uses;
  for (const auto& d : corpus) {
    for (const auto& u : d.utterances) words += text::tokenize(u.text).size();
    utterances += d.utterances.size();
    if (d.annotation.label) {
      ++s.contradictory_count;
      expl_words += text::tokenize(d.annotation.explanation).size();
    }
    ++s.category_histogram[d.category];
    ++topic_uses[d.topic_keyword];
  }
  const double n = static_cast<double>(corpus.size());
  s.mean_words_per_dialogue = static_cast<double>(words) / n;
  s.mean_sentences_per_dialogue = static_cast<double>(utterances) / n;
  s.mean_words_per_utterance =
      utterances ? static_cast<double>(words) / static_cast<double>(utterances) : 0.0;
  if (s.contradictory_count > 0)
    s.mean_explanation_words =
        static_cast<double>(expl_words) / static_cast<double>(s.contradictory_count);
  std::size_t rare = 0;
  for (const auto& [_, uses] : topic_uses) rare += uses <= reuse_limit ? 1 : 0;
  s.topic_reuse_fraction = static_cast<double>(rare) / static_cast<double>(topic_uses.size());
  return s;
}

inline ordered_json stats_to_json(const CorpusStats& s) {
  ordered_json j;
  j["dialogue_count"] = s.dialogue_count;
  j["contradictory_count"] = s.contradictory_count;
  j["mean_words_per_dialogue"] = s.mean_words_per_dialogue;
  j["mean_sentences_per_dialogue"] = s.mean_sentences_per_dialogue;
  j["mean_words_per_utterance"] = s.mean_words_per_utterance;
  j["mean_explanation_words"] = s.mean_explanation_words;
  j["category_histogram"] = s.category_histogram;
  j["topic_reuse_fraction"] = s.topic_reuse_fraction;
  return j;
}

// ---------------------------------------------------------------------------
// Splitting

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

namespace detail {

// Fisher-Yates over an explicit engine; std::shuffle is not portable
// across standard libraries.
inline void portable_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

/// Stratified by annotation label. Each stratum sends
/// floor(size * fraction + 0.5) members to test; both sides keep corpus order.
inline CorpusSplit split_corpus(const Corpus& corpus, double test_fraction,
                                std::uint64_t seed) {
  if (corpus.empty()) throw DegenerateSplit("corpus is empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  std::vector<bool> in_test(corpus.size(), false);
  for (bool label : {true, false}) {
    std::vector<std::size_t> stratum;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].annotation.label == label) stratum.push_back(i);
    if (stratum.empty()) continue;
    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(stratum.size()) * test_fraction + 0.5));
    if (n_test == 0 || n_test == stratum.size())
      throw DegenerateSplit(std::string(label ? "contradictory" : "non-contradictory") +
                            " stratum of " + std::to_string(stratum.size()) +
                            " leaves one side empty");
    detail::portable_shuffle(stratum, seed ^ (label ? 0x9e3779b97f4a7c15ULL : 0));
    for (std::size_t k = 0; k < n_test; ++k) in_test[stratum[k]] = true;
  }
  CorpusSplit out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (in_test[i] ? out.test : out.train).push_back(corpus[i]);
  return out;
}

}  // namespace contradial
