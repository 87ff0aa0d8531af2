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

// Report serialization. Every report is a JSON document with a "kind" and a
// "manifest"; the plain-text tables are rendered from that JSON so stored
// reports re-render identically.

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "contradial/annotation.hpp"
#include "contradial/pipeline.hpp"
#include "contradial/scoring.hpp"

namespace contradial::report {

inline ordered_json to_json(const pipeline::DetectionReport& r, const ordered_json& manifest) {
  ordered_json j;
  j["kind"] = "detection";
  j["manifest"] = manifest;
  j["backend"] = r.backend_id;
  j["metrics"] = {{"accuracy", r.metrics.accuracy},
                  {"precision", r.metrics.precision},
                  {"recall", r.metrics.recall},
                  {"f1", r.metrics.f1}};
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
                 {"tn", r.counts.tn}, {"abstained", r.abstained}};
  j["coverage"] = {{"covered", r.coverage.covered}, {"total", r.coverage.total}};
  j["flagged"] = r.flagged;
  auto rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json rj;
    rj["id"] = row.id;
    rj["gold"] = row.gold;
    rj["verdict"] = std::string(to_string(row.verdict.cls));
    if (row.verdict.matched_pattern) rj["matched"] = *row.verdict.matched_pattern;
    rj["raw"] = row.raw;
    rj["explanation"] = row.explanation;
    if (row.error) rj["error"] = *row.error;
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Rebuilds rows from a stored detection report (aggregates recomputed).
inline pipeline::DetectionReport detection_from_json(const json& j) {
  pipeline::DetectionReport r;
  r.backend_id = j.at("backend").get<std::string>();
  for (const auto& rj : j.at("rows")) {
    pipeline::DetectionRow row;
    row.id = rj.at("id").get<std::string>();
    row.gold = rj.at("gold").get<bool>();
    auto cls = parse_verdict_class(rj.at("verdict").get<std::string>());
    if (!cls) throw ConfigError("unknown verdict in report");
    row.verdict.cls = *cls;
    if (rj.contains("matched")) row.verdict.matched_pattern = rj["matched"].get<std::string>();
    row.raw = rj.at("raw").get<std::string>();
    row.explanation = rj.at("explanation").get<std::string>();
    if (rj.contains("error")) row.error = rj["error"].get<std::string>();
    r.rows.push_back(std::move(row));
  }
  pipeline::aggregate(r);
  return r;
}

inline ordered_json to_json(const pipeline::ExplanationEvalReport& r, const ordered_json& manifest) {
  ordered_json j;
  j["kind"] = "explanation";
  j["manifest"] = manifest;
  j["backend"] = r.backend_id;
  j["summary"] = scoring::report_to_json(r.summary);
  auto rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json rj;
    rj["id"] = row.id;
    rj["label"] = std::string(to_string(row.label));
    rj["explanation"] = row.explanation;
    rj["reference"] = row.reference;
    rj["s1"] = row.record.s1;
    rj["s2"] = row.record.s2;
    rj["eta"] = row.record.eta;
    rj["combined"] = row.record.combined;
    rj["flagged"] = row.record.flagged;
    rj["bleu4"] = row.bleu4;
    rj["rouge_l"] = row.rouge_l;
    rj["raw"] = row.raw;
    if (row.error) rj["error"] = *row.error;
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Unflagged explanations of a stored explanation report, for gating edits.
inline std::map<std::string, pipeline::ExplanationChoice> explanations_from_json(const json& j) {
  if (j.value("kind", "") != "explanation")
    throw ConfigError("expected an explanation report");
  std::map<std::string, pipeline::ExplanationChoice> out;
  for (const auto& row : j.at("rows"))
    if (!row.at("flagged").get<bool>())
      out[row.at("id").get<std::string>()] = {row.at("explanation").get<std::string>(),
                                              row.at("combined").get<double>()};
  return out;
}

inline ordered_json to_json(const pipeline::ModificationReport& r, const ordered_json& manifest) {
  ordered_json j;
  j["kind"] = "modification";
  j["manifest"] = manifest;
  j["status"] = r.complete ? "complete" : "partial";
  j["red_team"] = r.red_team_id;
  j["detector"] = r.detector_id;
  j["strategy"] = std::string(to_string(r.strategy));
  j["use_explanation"] = r.use_explanation;
  j["tau"] = r.tau;
  j["total"] = r.total;
  j["flagged_before"] = r.flagged_before;
  j["flagged_after"] = r.flagged_after;
  j["baseline_percentage"] = r.baseline_percentage;
  j["residual_percentage"] = r.residual_percentage;
  auto revs = ordered_json::array();
  for (const auto& rec : r.revisions) {
    ordered_json rj;
    rj["id"] = rec.id;
    rj["strategy"] = std::string(to_string(rec.strategy));
    rj["used_explanation"] = rec.used_explanation;
    rj["explanation_gated"] = rec.explanation_gated;
    rj["status"] = std::string(to_string(rec.status));
    rj["edited_indices"] = rec.edited_indices;
    rj["raw"] = rec.raw;
    if (rec.error) rj["error"] = *rec.error;
    revs.push_back(std::move(rj));
  }
  j["revisions"] = std::move(revs);
  auto modified = ordered_json::array();
  for (const auto& d : r.modified) modified.push_back(dialogue_to_json(d));
  j["modified"] = std::move(modified);
  return j;
}

inline ordered_json to_json(const scoring::TauCalibration& c,
                            const std::vector<scoring::CalibrationPoint>& points,
                            const std::vector<double>& grid, const ordered_json& manifest) {
  ordered_json j;
  j["kind"] = "calibration";
  j["manifest"] = manifest;
  j["tau"] = c.tau;
  j["saturated"] = c.saturated;
  j["max_invalid"] = c.max_invalid;
  j["grid"] = grid;
  auto pts = ordered_json::array();
  for (const auto& p : points) pts.push_back({{"combined", p.combined}, {"valid", p.valid}});
  j["points"] = std::move(pts);
  return j;
}

/// Human-evaluation summary for one model's explanations.
inline ordered_json to_json(const annotation::Agreement& a, const std::string& model,
                            const ordered_json& manifest) {
  ordered_json j;
  j["kind"] = "agreement";
  j["manifest"] = manifest;
  j["model"] = model;
  auto body = annotation::to_json(a);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

// ---------------------------------------------------------------------------
// Plain-text tables

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width(header_.size(), 0);
    auto measure = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i)
        width[i] = std::max(width[i], r[i].size());
    };
    measure(header_);
    for (const auto& r : rows_) measure(r);
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < width.size(); ++i) {
        const std::string cell = i < r.size() ? r[i] : "";
        if (i) out << " | ";
        out << cell << std::string(width[i] - cell.size(), ' ');
      }
      out << '\n';
    };
    line(header_);
    for (std::size_t i = 0; i < width.size(); ++i) {
      if (i) out << "-+-";
      out << std::string(width[i], '-');
    }
    out << '\n';
    for (const auto& r : rows_) line(r);
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string alpha_label(double a) {
  std::string s = fixed(a, 2);
  if (s.back() == '0') s.pop_back();
  return "P_" + s;
}

/// Text table for any stored report; the layout follows its "kind".
inline std::string render_table(const json& j) {
  const auto kind = j.value("kind", "");
  if (kind == "detection") {
    Table t({"Model", "Accuracy", "F1", "Recall"});
    const auto& m = j.at("metrics");
    t.add({j.at("backend").get<std::string>(), fixed(100.0 * m.at("accuracy").get<double>(), 1),
           fixed(100.0 * m.at("f1").get<double>(), 1),
           fixed(100.0 * m.at("recall").get<double>(), 1)});
    const auto& cov = j.at("coverage");
    return t.render() + "Covered " + std::to_string(cov.at("covered").get<std::size_t>()) +
           " out of " + std::to_string(cov.at("total").get<std::size_t>()) + "\n";
  }
  if (kind == "explanation") {
    const auto s = scoring::report_from_json(j.at("summary"));
    auto alphas = s.p_alpha;
    std::sort(alphas.begin(), alphas.end(),
              [](const auto& a, const auto& b) { return a.alpha > b.alpha; });
    std::vector<std::string> header{"Model"};
    std::vector<std::string> row{j.at("backend").get<std::string>()};
    for (const auto& a : alphas) {
      header.push_back(alpha_label(a.alpha));
      row.push_back(fixed(a.percentage, 2));
    }
    for (const char* h : {"M_BERT", "M_BART", "BLEU-4", "ROUGE-L"}) header.emplace_back(h);
    row.push_back(fixed(s.mean_s1, 4));
    row.push_back(fixed(s.mean_s2, 4));
    row.push_back(s.mean_bleu4 ? fixed(100.0 * *s.mean_bleu4, 2) : "-");
    row.push_back(s.mean_rouge_l ? fixed(100.0 * *s.mean_rouge_l, 2) : "-");
    Table t(header);
    t.add(row);
    std::string out = t.render();
    out += "Distribution of S (" + std::to_string(s.count) + " explanations, " +
           std::to_string(s.flagged) + " flagged)\n";
    for (const auto& b : s.histogram)
      out += "  [" + fixed(b.lower, 2) + ", " + fixed(b.upper, 2) + ")  " +
             std::to_string(b.count) + "\n";
    return out;
  }
  if (kind == "modification") {
    Table t({"Model", "Fine-tune", "Explanation", "Percentage"});
    t.add({"w/o modification", "N/A", "N/A", fixed(j.at("baseline_percentage").get<double>(), 2)});
    std::string fine_tuned = "N/A";
    if (j.contains("manifest") && j["manifest"].contains("fine_tuned"))
      fine_tuned = j["manifest"]["fine_tuned"].get<bool>() ? "yes" : "no";
    t.add({j.at("red_team").get<std::string>(), fine_tuned,
           j.at("use_explanation").get<bool>() ? "yes" : "no",
           fixed(j.at("residual_percentage").get<double>(), 2)});
    std::string out = t.render();
    if (j.value("status", "") != "complete") out += "(partial report)\n";
    return out;
  }
  if (kind == "agreement") {
    Table t({"Model", "Label Consist.", "Fluency", "Completeness"});
    const auto& m = j.at("mean_per_item");
    t.add({j.at("model").get<std::string>(), fixed(m.at("label_consistency").get<double>(), 2),
           fixed(m.at("fluency").get<double>(), 2), fixed(m.at("completeness").get<double>(), 2)});
    std::string out = t.render() + "kappa:";
    for (const auto& [dim, k] : j.at("kappa").items()) out += " " + dim + " " + fixed(k.get<double>(), 2);
    return out + " (" + std::to_string(j.at("complete_items").get<std::size_t>()) + " items)\n";
  }
  if (kind == "calibration") {
    std::string out = "tau = " + fixed(j.at("tau").get<double>(), 2);
    if (j.at("saturated").get<bool>()) out += " (saturated: no grid value excludes every invalid point)";
    return out + "\n";
  }
  throw ConfigError("unknown report kind '" + kind + "'");
}

inline void write_json(const std::string& path, const ordered_json& j) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot write " + path);
}

}  // namespace contradial::report
