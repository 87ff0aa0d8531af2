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

// Explanation scoring: S = S1 + eta * S2 against a reference explanation,
// the P_alpha / mean-score report, and threshold calibration from human
// validity labels.
//
// The S1 slot holds a bounded similarity (BERTScore-like, [0, 1]); the S2
// slot a log-scale score (BARTScore-like, <= 0). Built-in lexical stand-ins
// fill both slots; remote services can replace either one.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contradial/backend.hpp"
#include "contradial/errors.hpp"
#include "contradial/text.hpp"
#include "httplib.h"
#include "json.hpp"

namespace contradial::scoring {

inline constexpr double kDefaultEta = 0.1;
inline constexpr double kDefaultTau = 0.65;
inline constexpr double kDefaultBucketWidth = 0.05;

inline std::vector<double> default_alphas() { return {0.6, 0.65, 0.7}; }
inline std::vector<double> default_grid() { return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80}; }

inline void check_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
}

enum class ScorerSlot { s1, s2 };
enum class ScorerKind { lexical_f1, log_precision, remote };

inline std::string_view to_string(ScorerSlot s) { return s == ScorerSlot::s1 ? "s1" : "s2"; }

inline std::string_view to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::lexical_f1: return "lexical_f1";
    case ScorerKind::log_precision: return "log_precision";
    case ScorerKind::remote: return "remote";
  }
  return "?";
}

inline ScorerKind parse_scorer_kind(std::string_view s) {
  if (s == "lexical_f1") return ScorerKind::lexical_f1;
  if (s == "log_precision") return ScorerKind::log_precision;
  if (s == "remote") return ScorerKind::remote;
  throw ConfigError("unknown scorer kind '" + std::string(s) + "'");
}

struct ScorerPlugin {
  ScorerSlot slot = ScorerSlot::s1;
  ScorerKind kind = ScorerKind::lexical_f1;
  std::optional<std::string> endpoint;

  void validate() const {
    if (kind == ScorerKind::remote && (!endpoint || endpoint->empty()))
      throw ConfigError(std::string("remote scorer in slot ") + std::string(to_string(slot)) +
                        " needs an endpoint");
  }
};

namespace detail {

inline std::size_t clipped_overlap(const std::vector<std::string>& cand,
                                   const std::vector<std::string>& ref) {
  std::map<std::string_view, std::size_t> rc;
  for (const auto& t : ref) ++rc[t];
  std::size_t m = 0;
  for (const auto& t : cand) {
    auto it = rc.find(t);
    if (it != rc.end() && it->second > 0) {
      --it->second;
      ++m;
    }
  }
  return m;
}

}  // namespace detail

/// Token-multiset F1 with clipped counts, in [0, 1].
inline double lexical_f1(std::string_view candidate, std::string_view reference) {
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  const auto m = detail::clipped_overlap(c, r);
  if (m == 0) return 0.0;
  const double p = static_cast<double>(m) / static_cast<double>(c.size());
  const double rc = static_cast<double>(m) / static_cast<double>(r.size());
  return 2.0 * p * rc / (p + rc);
}

/// ln((matched + 1) / (|candidate| + 1)), always <= 0.
inline double log_precision(std::string_view candidate, std::string_view reference) {
  const auto c = text::tokenize(candidate);
  const auto r = text::tokenize(reference);
  const auto m = detail::clipped_overlap(c, r);
  return std::log((static_cast<double>(m) + 1.0) / (static_cast<double>(c.size()) + 1.0));
}

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::string_view candidate, std::string_view reference) const = 0;
  virtual std::string name() const = 0;
};

class LexicalF1Scorer : public Scorer {
 public:
  double score(std::string_view c, std::string_view r) const override { return lexical_f1(c, r); }
  std::string name() const override { return "lexical_f1"; }
};

class LogPrecisionScorer : public Scorer {
 public:
  double score(std::string_view c, std::string_view r) const override {
    return log_precision(c, r);
  }
  std::string name() const override { return "log_precision"; }
};

/// POST `{endpoint}/score` with {"candidate", "reference"}; reads {"score"}.
class RemoteScorer : public Scorer {
 public:
  RemoteScorer(std::string endpoint, ScorerSlot slot,
               std::chrono::seconds timeout = std::chrono::seconds(60))
      : endpoint_(std::move(endpoint)), url_(parse_base_url(endpoint_)), slot_(slot),
        timeout_(timeout) {}

  double score(std::string_view candidate, std::string_view reference) const override {
    const std::string slot(to_string(slot_));
    nlohmann::ordered_json body;
    body["candidate"] = std::string(candidate);
    body["reference"] = std::string(reference);
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Post(url_.path + "/score", body.dump(), "application/json");
    if (!res) throw RemoteScorerFailure(slot, httplib::to_string(res.error()));
    if (res->status != 200)
      throw RemoteScorerFailure(slot, "HTTP " + std::to_string(res->status));
    try {
      auto j = json::parse(res->body);
      if (!j.is_object() || !j.contains("score") || !j["score"].is_number())
        throw RemoteScorerFailure(slot, "response lacks a numeric \"score\"");
      return j["score"].get<double>();
    } catch (const json::exception& e) {
      throw RemoteScorerFailure(slot, std::string("malformed response: ") + e.what());
    }
  }

  std::string name() const override { return "remote:" + endpoint_; }

 private:
  std::string endpoint_;
  ParsedUrl url_;
  ScorerSlot slot_;
  std::chrono::seconds timeout_;
};

inline std::shared_ptr<const Scorer> make_scorer(const ScorerPlugin& plugin) {
  plugin.validate();
  switch (plugin.kind) {
    case ScorerKind::lexical_f1: return std::make_shared<LexicalF1Scorer>();
    case ScorerKind::log_precision: return std::make_shared<LogPrecisionScorer>();
    case ScorerKind::remote: return std::make_shared<RemoteScorer>(*plugin.endpoint, plugin.slot);
  }
  throw ConfigError("unknown scorer kind");
}

struct ScoreRecord {
  std::string dialogue_id;
  double s1 = 0.0;
  double s2 = 0.0;
  double eta = kDefaultEta;
  double combined = 0.0;  // s1 + eta * s2
  /// Set when no explanation could be scored; s1, s2 and combined are 0.
  bool flagged = false;
};

inline ScoreRecord score_explanation(std::string_view candidate, std::string_view reference,
                                     const Scorer& s1, const Scorer& s2,
                                     double eta = kDefaultEta, std::string dialogue_id = {}) {
  check_eta(eta);
  if (text::trim(reference).empty()) throw EmptyReference("reference explanation is empty");
  ScoreRecord r;
  r.dialogue_id = std::move(dialogue_id);
  r.s1 = s1.score(candidate, reference);
  r.s2 = s2.score(candidate, reference);
  r.eta = eta;
  r.combined = r.s1 + eta * r.s2;
  return r;
}

/// Percentage of scores strictly above alpha.
inline double p_alpha(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw EmptyScores("no scores");
  const auto above = std::count_if(scores.begin(), scores.end(), [&](double s) { return s > alpha; });
  return 100.0 * static_cast<double>(above) / static_cast<double>(scores.size());
}

inline double p_alpha(const std::vector<double>& scores, double alpha) {
  return p_alpha(std::span<const double>(scores), alpha);
}

inline bool satisfactory(const ScoreRecord& record, double tau = kDefaultTau) {
  return record.combined > tau;
}

struct CalibrationPoint {
  double combined = 0.0;
  bool valid = false;
};

struct TauCalibration {
  double tau = 0.0;
  /// No grid value excluded every invalid point; tau is the grid maximum.
  bool saturated = false;
  double max_invalid = 0.0;
};

/// Smallest grid value tau such that no invalid point scores above tau.
inline TauCalibration calibrate_tau(std::span<const CalibrationPoint> points,
                                    std::span<const double> grid) {
  if (grid.empty()) throw EmptyGrid("calibration grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw ConfigError("calibration grid must be ascending");
  std::optional<double> max_invalid;
  for (const auto& p : points)
    if (!p.valid) max_invalid = std::max(max_invalid.value_or(p.combined), p.combined);
  if (!max_invalid) throw NoInvalidPoints("calibration needs at least one invalid point");
  TauCalibration out;
  out.max_invalid = *max_invalid;
  for (double t : grid) {
    if (!(*max_invalid > t)) {
      out.tau = t;
      return out;
    }
  }
  out.tau = grid.back();
  out.saturated = true;
  return out;
}

inline TauCalibration calibrate_tau(const std::vector<CalibrationPoint>& points,
                                    const std::vector<double>& grid) {
  return calibrate_tau(std::span<const CalibrationPoint>(points), std::span<const double>(grid));
}

struct HistogramBucket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

/// Buckets [k*w, (k+1)*w) spanning the observed range, empty ones included.
inline std::vector<HistogramBucket> histogram(std::span<const double> values, double width) {
  if (!(width > 0.0)) throw ConfigError("bucket width must be > 0");
  std::vector<HistogramBucket> out;
  if (values.empty()) return out;
  auto index = [&](double v) {
    // The epsilon keeps 0.70 / 0.05 from landing one bucket low.
    return static_cast<long long>(std::floor(v / width + 1e-9));
  };
  long long lo = index(values[0]), hi = lo;
  for (double v : values) {
    lo = std::min(lo, index(v));
    hi = std::max(hi, index(v));
  }
  for (long long k = lo; k <= hi; ++k)
    out.push_back({static_cast<double>(k) * width, static_cast<double>(k + 1) * width, 0});
  for (double v : values) ++out[static_cast<std::size_t>(index(v) - lo)].count;
  return out;
}

struct AlphaShare {
  double alpha = 0.0;
  double percentage = 0.0;
};

struct ExplanationReport {
  std::size_t count = 0;
  std::size_t flagged = 0;
  std::vector<AlphaShare> p_alpha;
  double mean_s1 = 0.0;  // M_BERT slot
  double mean_s2 = 0.0;  // M_BART slot
  double mean_combined = 0.0;
  std::vector<HistogramBucket> histogram;
  std::optional<double> mean_bleu4;
  std::optional<double> mean_rouge_l;
};

inline ExplanationReport score_report(const std::vector<ScoreRecord>& records,
                                      const std::vector<double>& alphas = default_alphas(),
                                      double bucket_width = kDefaultBucketWidth) {
  if (records.empty()) throw EmptyScores("no score records");
  ExplanationReport rep;
  rep.count = records.size();
  std::vector<double> combined;
  combined.reserve(records.size());
  double s1 = 0.0, s2 = 0.0, c = 0.0;
  for (const auto& r : records) {
    combined.push_back(r.combined);
    s1 += r.s1;
    s2 += r.s2;
    c += r.combined;
    rep.flagged += r.flagged ? 1 : 0;
  }
  const double n = static_cast<double>(records.size());
  rep.mean_s1 = s1 / n;
  rep.mean_s2 = s2 / n;
  rep.mean_combined = c / n;
  for (double a : alphas) rep.p_alpha.push_back({a, p_alpha(combined, a)});
  rep.histogram = histogram(combined, bucket_width);
  return rep;
}

inline ordered_json report_to_json(const ExplanationReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["flagged"] = r.flagged;
  auto pa = ordered_json::array();
  for (const auto& a : r.p_alpha) pa.push_back({{"alpha", a.alpha}, {"percentage", a.percentage}});
  j["p_alpha"] = std::move(pa);
  j["mean_s1"] = r.mean_s1;
  j["mean_s2"] = r.mean_s2;
  j["mean_combined"] = r.mean_combined;
  if (r.mean_bleu4) j["mean_bleu4"] = *r.mean_bleu4;
  if (r.mean_rouge_l) j["mean_rouge_l"] = *r.mean_rouge_l;
  auto h = ordered_json::array();
  for (const auto& b : r.histogram)
    h.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
  j["histogram"] = std::move(h);
  return j;
}

inline ExplanationReport report_from_json(const json& j) {
  ExplanationReport r;
  r.count = j.at("count").get<std::size_t>();
  r.flagged = j.at("flagged").get<std::size_t>();
  for (const auto& a : j.at("p_alpha"))
    r.p_alpha.push_back({a.at("alpha").get<double>(), a.at("percentage").get<double>()});
  r.mean_s1 = j.at("mean_s1").get<double>();
  r.mean_s2 = j.at("mean_s2").get<double>();
  r.mean_combined = j.at("mean_combined").get<double>();
  if (j.contains("mean_bleu4")) r.mean_bleu4 = j["mean_bleu4"].get<double>();
  if (j.contains("mean_rouge_l")) r.mean_rouge_l = j["mean_rouge_l"].get<double>();
  for (const auto& b : j.at("histogram"))
    r.histogram.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(),
                           b.at("count").get<std::size_t>()});
  return r;
}

}  // namespace contradial::scoring
