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

// The three red-teaming stages over a corpus:
//   detection    analyzer labels each dialogue, metrics against gold labels
//   explanation  analyzer explains gold-contradictory dialogues, scored
//                against the reference explanations
//   modification red-team model revises contradictory dialogues (Direct or
//                Joint Edit, optionally guided by a gated explanation); a
//                detector re-labels the corpus before and after.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "contradial/backend.hpp"
#include "contradial/corpus.hpp"
#include "contradial/errors.hpp"
#include "contradial/metrics.hpp"
#include "contradial/prompts.hpp"
#include "contradial/scoring.hpp"
#include "contradial/verdict.hpp"

namespace contradial::pipeline {

enum class ParseStyle { label, rules };

inline std::string_view to_string(ParseStyle p) { return p == ParseStyle::label ? "label" : "rules"; }

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  const auto threads = std::min(std::max<std::size_t>(parallelism, 1), n);
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

inline std::string failure_text(const BackendFailure& f) { return f.kind + ": " + f.message; }

}  // namespace detail

/// Two contradictory demos picked deterministically from `pool`.
inline std::vector<LabeledDialogue> choose_demos(const Corpus& pool, std::uint64_t seed) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].annotation.label) idx.push_back(i);
  if (idx.size() < 2) throw DemoCountMismatch("demo pool holds fewer than 2 contradictory dialogues");
  contradial::detail::portable_shuffle(idx, seed);
  std::sort(idx.begin(), idx.begin() + 2);
  return {pool[idx[0]], pool[idx[1]]};
}

// ---------------------------------------------------------------------------
// Detection

struct DetectionConfig {
  ShotMode mode = ShotMode::zero_shot;
  std::vector<LabeledDialogue> demos;
  bool with_explanation = false;
  ParseStyle parse = ParseStyle::label;
  RuleSet rules = vicuna_llama_rules();
  TemplateSet templates;
  GenParams params;
  std::size_t parallelism = 1;
  std::size_t parallelism_cap = 64;
};

struct DetectionRow {
  std::string id;
  bool gold = false;
  Verdict verdict;
  std::string raw;
  std::string explanation;
  std::optional<std::string> error;
};

struct DetectionReport {
  std::string backend_id;
  std::vector<DetectionRow> rows;
  metrics::ConfusionCounts counts;
  /// Gold-negative rows without a usable answer: wrong, but not false positives.
  std::size_t abstained = 0;
  metrics::ClassificationMetrics metrics;
  Coverage coverage;
  std::size_t flagged = 0;  // rows with a contradictory verdict
};

/// Recomputes the aggregate fields from `report.rows`. Only a contradictory
/// verdict counts as a positive prediction; unparsed and no-clear answers
/// are always wrong.
inline void aggregate(DetectionReport& report) {
  report.counts = {};
  report.abstained = 0;
  report.flagged = 0;
  std::vector<Verdict> verdicts;
  for (const auto& r : report.rows) {
    verdicts.push_back(r.verdict);
    const bool pos = r.verdict.cls == VerdictClass::contradictory;
    report.flagged += pos ? 1 : 0;
    if (r.gold) {
      (pos ? report.counts.tp : report.counts.fn)++;
    } else if (pos) {
      report.counts.fp++;
    } else if (r.verdict.cls == VerdictClass::non_contradictory) {
      report.counts.tn++;
    } else {
      report.abstained++;
    }
  }
  report.coverage = coverage(verdicts);
  if (!report.rows.empty())
    report.metrics = metrics::classification_metrics(report.counts, report.abstained);
}

inline Verdict interpret(const std::string& raw, const DetectionConfig& cfg,
                         std::string& explanation) {
  if (cfg.parse == ParseStyle::label) {
    auto p = parse_label(raw);
    explanation = p.explanation;
    return verdict_from_label(p);
  }
  explanation.clear();
  return classify_response(raw, cfg.rules);
}

inline DetectionReport run_detection(const Corpus& corpus, Backend& analyzer,
                                     const DetectionConfig& cfg) {
  cfg.params.validate();
  cfg.rules.validate();
  std::vector<RenderedPrompt> prompts;
  prompts.reserve(corpus.size());
  for (const auto& d : corpus)
    prompts.push_back(render_detection_prompt(
        d, cfg.mode, cfg.mode == ShotMode::few_shot ? cfg.demos : std::vector<LabeledDialogue>{},
        cfg.with_explanation, cfg.templates));
  auto outcomes = complete_batch(analyzer, prompts, cfg.params, cfg.parallelism, cfg.parallelism_cap);

  DetectionReport report;
  report.backend_id = analyzer.id();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    DetectionRow row;
    row.id = corpus[i].id;
    row.gold = corpus[i].annotation.label;
    if (auto* c = std::get_if<Completion>(&outcomes[i])) {
      row.raw = c->text;
      row.verdict = interpret(row.raw, cfg, row.explanation);
    } else {
      row.error = detail::failure_text(std::get<BackendFailure>(outcomes[i]));
    }
    report.rows.push_back(std::move(row));
  }
  aggregate(report);
  return report;
}

// ---------------------------------------------------------------------------
// Explanation

struct ExplanationConfig {
  TemplateSet templates;
  std::shared_ptr<const scoring::Scorer> s1 = std::make_shared<scoring::LexicalF1Scorer>();
  std::shared_ptr<const scoring::Scorer> s2 = std::make_shared<scoring::LogPrecisionScorer>();
  double eta = scoring::kDefaultEta;
  std::vector<double> alphas = scoring::default_alphas();
  double bucket_width = scoring::kDefaultBucketWidth;
  GenParams params;
  std::size_t parallelism = 1;
  std::size_t parallelism_cap = 64;
};

struct ExplanationRow {
  std::string id;
  std::string raw;
  Label label = Label::unparsed;
  std::string explanation;
  std::string reference;
  scoring::ScoreRecord record;
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  std::optional<std::string> error;
};

struct ExplanationEvalReport {
  std::string backend_id;
  std::vector<ExplanationRow> rows;
  scoring::ExplanationReport summary;
};

/// Only gold-contradictory dialogues are evaluated. An answer that is not a
/// "yes" label yields a flagged all-zero record.
inline ExplanationEvalReport run_explanation_eval(const Corpus& corpus, Backend& analyzer,
                                                  const ExplanationConfig& cfg) {
  scoring::check_eta(cfg.eta);
  cfg.params.validate();
  std::vector<const LabeledDialogue*> targets;
  for (const auto& d : corpus)
    if (d.annotation.label) targets.push_back(&d);
  if (targets.empty()) throw EmptyScores("corpus has no contradictory dialogues");

  std::vector<RenderedPrompt> prompts;
  for (const auto* d : targets)
    prompts.push_back(render_detection_prompt(*d, ShotMode::zero_shot, {}, true, cfg.templates));
  auto outcomes = complete_batch(analyzer, prompts, cfg.params, cfg.parallelism, cfg.parallelism_cap);

  ExplanationEvalReport report;
  report.backend_id = analyzer.id();
  report.rows.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& row = report.rows[i];
    row.id = targets[i]->id;
    row.reference = targets[i]->annotation.explanation;
    row.record.dialogue_id = row.id;
    row.record.eta = cfg.eta;
    row.record.flagged = true;
    if (auto* c = std::get_if<Completion>(&outcomes[i])) {
      row.raw = c->text;
      auto p = parse_label(row.raw);
      row.label = p.label;
      row.explanation = p.explanation;
    } else {
      row.error = detail::failure_text(std::get<BackendFailure>(outcomes[i]));
    }
  }
  // Scorers may be remote; score under the same parallelism bound.
  detail::parallel_for(report.rows.size(), cfg.parallelism, [&](std::size_t i) {
    auto& row = report.rows[i];
    if (row.label != Label::yes) return;
    row.record = scoring::score_explanation(row.explanation, row.reference, *cfg.s1, *cfg.s2,
                                            cfg.eta, row.id);
    row.bleu4 = metrics::bleu4(row.explanation, row.reference);
    row.rouge_l = metrics::rouge_l(row.explanation, row.reference);
  });

  std::vector<scoring::ScoreRecord> records;
  double bleu = 0.0, rouge = 0.0;
  for (const auto& r : report.rows) {
    records.push_back(r.record);
    bleu += r.bleu4;
    rouge += r.rouge_l;
  }
  report.summary = scoring::score_report(records, cfg.alphas, cfg.bucket_width);
  report.summary.mean_bleu4 = bleu / static_cast<double>(records.size());
  report.summary.mean_rouge_l = rouge / static_cast<double>(records.size());
  return report;
}

// ---------------------------------------------------------------------------
// Modification

struct ExplanationChoice {
  std::string text;
  double combined = 0.0;
};

/// Generated explanations keyed by dialogue id, as produced by
/// run_explanation_eval.
inline std::map<std::string, ExplanationChoice> explanations_from(const ExplanationEvalReport& r) {
  std::map<std::string, ExplanationChoice> out;
  for (const auto& row : r.rows)
    if (!row.record.flagged) out[row.id] = {row.explanation, row.record.combined};
  return out;
}

struct ModificationConfig {
  EditStrategy strategy = EditStrategy::direct;
  bool use_explanation = false;
  std::map<std::string, ExplanationChoice> explanations;
  double tau = scoring::kDefaultTau;
  TemplateSet templates;
  GenParams params;
  std::size_t parallelism = 1;
  std::size_t parallelism_cap = 64;
  DetectionConfig detection;
};

enum class RevisionStatus { accepted, structure_mismatch, empty_reply, backend_error };

inline std::string_view to_string(RevisionStatus s) {
  switch (s) {
    case RevisionStatus::accepted: return "accepted";
    case RevisionStatus::structure_mismatch: return "StructureMismatch";
    case RevisionStatus::empty_reply: return "empty_reply";
    case RevisionStatus::backend_error: return "backend_error";
  }
  return "?";
}

struct RevisionRecord {
  std::string id;
  EditStrategy strategy = EditStrategy::direct;
  bool used_explanation = false;
  /// Explanation requested but missing or not above tau; revised without one.
  bool explanation_gated = false;
  RevisionStatus status = RevisionStatus::accepted;
  std::vector<std::size_t> edited_indices;
  std::string raw;
  std::optional<std::string> error;
};

struct ModificationReport {
  std::string red_team_id;
  std::string detector_id;
  EditStrategy strategy = EditStrategy::direct;
  bool use_explanation = false;
  double tau = scoring::kDefaultTau;
  std::size_t total = 0;
  std::size_t flagged_before = 0;
  std::size_t flagged_after = 0;
  double baseline_percentage = 0.0;
  double residual_percentage = 0.0;
  std::vector<RevisionRecord> revisions;
  Corpus modified;
  bool complete = false;
};

/// Splices `replacement` over utterance `target`; everything else is copied.
inline LabeledDialogue splice_utterance(const LabeledDialogue& d, std::size_t target,
                                        std::string replacement) {
  LabeledDialogue out = d;
  out.utterances.at(target).text = std::move(replacement);
  return out;
}

/// Cleans a Direct Edit reply: trims, drops an echoed `role:` prefix, and
/// folds line breaks so the utterance stays one line.
inline std::string clean_direct_reply(std::string_view reply) {
  auto t = text::trim(reply);
  if (auto parsed = parse_dialogue_block(t); parsed && parsed->size() == 1) return parsed->front().text;
  std::string out;
  bool space = false;
  for (char c : t) {
    if (c == '\n' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !out.empty() && out.back() != ' ') out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

struct JointOutcome {
  std::optional<LabeledDialogue> dialogue;  // empty on StructureMismatch
  std::string reason;
};

/// Accepts a full-dialogue reply only if it has the input's length and
/// (anonymized) speaker sequence. Speaker roles of the input are kept.
inline JointOutcome apply_joint_reply(const LabeledDialogue& d, std::string_view reply) {
  auto parsed = parse_dialogue_block(reply);
  if (!parsed) return {std::nullopt, "reply is not a `role: text` dialogue"};
  if (parsed->size() != d.utterances.size())
    return {std::nullopt, "expected " + std::to_string(d.utterances.size()) + " utterances, got " +
                              std::to_string(parsed->size())};
  const auto anon = anonymize_roles(d);
  LabeledDialogue out = d;
  for (std::size_t i = 0; i < parsed->size(); ++i) {
    if ((*parsed)[i].role != anon.utterances[i].role)
      return {std::nullopt, "speaker sequence differs at utterance " + std::to_string(i)};
    out.utterances[i].text = (*parsed)[i].text;
  }
  return {std::move(out), {}};
}

inline double percentage(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

/// `checkpoint`, when set, receives the partial report after each stage.
inline ModificationReport run_modification(
    const Corpus& corpus, Backend& red_team, Backend& detector, const ModificationConfig& cfg,
    const std::function<void(const ModificationReport&)>& checkpoint = {}) {
  cfg.params.validate();
  ModificationReport report;
  report.red_team_id = red_team.id();
  report.detector_id = detector.id();
  report.strategy = cfg.strategy;
  report.use_explanation = cfg.use_explanation;
  report.tau = cfg.tau;
  report.total = corpus.size();

  const auto before = run_detection(corpus, detector, cfg.detection);
  report.flagged_before = before.flagged;
  report.baseline_percentage = percentage(before.flagged, corpus.size());
  if (checkpoint) checkpoint(report);

  std::vector<std::size_t> targets;
  std::vector<RenderedPrompt> prompts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& d = corpus[i];
    if (!d.annotation.label) continue;
    RevisionRecord rec;
    rec.id = d.id;
    rec.strategy = cfg.strategy;
    std::optional<std::string> expl;
    if (cfg.use_explanation) {
      auto it = cfg.explanations.find(d.id);
      if (it != cfg.explanations.end() && it->second.combined > cfg.tau) {
        expl = it->second.text;
        rec.used_explanation = true;
      } else {
        rec.explanation_gated = true;
      }
    }
    prompts.push_back(render_modification_prompt(d, cfg.strategy, expl, cfg.templates));
    targets.push_back(i);
    report.revisions.push_back(std::move(rec));
  }
  auto outcomes = complete_batch(red_team, prompts, cfg.params, cfg.parallelism, cfg.parallelism_cap);

  report.modified = corpus;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto& rec = report.revisions[k];
    const auto& original = corpus[targets[k]];
    const auto* c = std::get_if<Completion>(&outcomes[k]);
    if (!c) {
      rec.status = RevisionStatus::backend_error;
      rec.error = detail::failure_text(std::get<BackendFailure>(outcomes[k]));
      continue;
    }
    rec.raw = c->text;
    if (cfg.strategy == EditStrategy::direct) {
      auto replacement = clean_direct_reply(c->text);
      if (replacement.empty()) {
        rec.status = RevisionStatus::empty_reply;
        continue;
      }
      const auto target = edit_target_index(original);
      report.modified[targets[k]] = splice_utterance(original, target, std::move(replacement));
      rec.edited_indices = {target};
    } else {
      auto joint = apply_joint_reply(original, c->text);
      if (!joint.dialogue) {
        rec.status = RevisionStatus::structure_mismatch;
        rec.error = joint.reason;
        continue;
      }
      for (std::size_t u = 0; u < original.utterances.size(); ++u)
        if (joint.dialogue->utterances[u].text != original.utterances[u].text)
          rec.edited_indices.push_back(u);
      report.modified[targets[k]] = std::move(*joint.dialogue);
    }
  }
  if (checkpoint) checkpoint(report);

  const auto after = run_detection(report.modified, detector, cfg.detection);
  report.flagged_after = after.flagged;
  report.residual_percentage = percentage(after.flagged, corpus.size());
  report.complete = true;
  if (checkpoint) checkpoint(report);
  return report;
}

}  // namespace contradial::pipeline
