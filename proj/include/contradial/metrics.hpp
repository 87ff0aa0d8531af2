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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contradial/errors.hpp"
#include "contradial/text.hpp"

namespace contradial::metrics {

/// Positive class = contradictory.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace detail

/// Any 0/0 ratio is 0. `abstained` counts rows that were neither right nor
/// wrong-positive (unparsed answers on gold-negative items): they widen the
/// accuracy denominator and touch nothing else.
inline ClassificationMetrics classification_metrics(const ConfusionCounts& c,
                                                    std::size_t abstained = 0) {
  const auto n = c.total() + abstained;
  if (n == 0) throw EmptyEvaluation("no rows to evaluate");
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  m.precision = detail::ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  m.recall = detail::ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.f1 = detail::ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// BLEU-4

/// Per-order n-gram multisets of one token sequence, n = 1..4.
class NGramProfile {
 public:
  static constexpr std::size_t kMaxOrder = 4;

  explicit NGramProfile(const std::vector<std::string>& tokens) : length_(tokens.size()) {
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      if (tokens.size() < n) continue;
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t k = 1; k < n; ++k) {
          key.push_back('\x1f');
          key += tokens[i + k];
        }
        ++grams_[n - 1][key];
      }
    }
  }

  std::size_t length() const { return length_; }

  /// max(0, length - n + 1)
  std::size_t count(std::size_t n) const { return length_ >= n ? length_ - n + 1 : 0; }

  const std::map<std::string, std::size_t>& grams(std::size_t n) const { return grams_[n - 1]; }

  /// Candidate n-grams matched against `reference`, counts clipped.
  std::size_t clipped_matches(const NGramProfile& reference, std::size_t n) const {
    std::size_t m = 0;
    const auto& ref = reference.grams(n);
    for (const auto& [g, cnt] : grams(n)) {
      auto it = ref.find(g);
      if (it != ref.end()) m += std::min(cnt, it->second);
    }
    return m;
  }

 private:
  std::size_t length_;
  std::array<std::map<std::string, std::size_t>, kMaxOrder> grams_;
};

/// Sentence BLEU with uniform weights over orders 1..min(4, |candidate|).
/// Orders >= 2 with no match use precision 1 / (2 * (ngram_count + 1));
/// a zero unigram precision gives 0.
inline double bleu4(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty()) return 0.0;
  const NGramProfile cp(cand), rp(ref);
  const std::size_t max_n = std::min<std::size_t>(NGramProfile::kMaxOrder, cand.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto total = cp.count(n);
    const auto matched = cp.clipped_matches(rp, n);
    double p;
    if (matched == 0) {
      if (n == 1) return 0.0;
      p = 1.0 / (2.0 * (static_cast<double>(total) + 1.0));
    } else {
      p = static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

// ---------------------------------------------------------------------------
// ROUGE-L

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS-based F1 over tokens.
inline double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  const auto lcs = lcs_length(cand, ref);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

// ---------------------------------------------------------------------------
// Cohen's kappa

/// kappa = (p_o - p_e) / (1 - p_e); defined as 1 when p_e = 1.
template <typename T>
double cohen_kappa(std::span<const T> labels_a, std::span<const T> labels_b) {
  if (labels_a.size() != labels_b.size())
    throw LengthMismatch("rater label vectors differ in length (" +
                         std::to_string(labels_a.size()) + " vs " +
                         std::to_string(labels_b.size()) + ")");
  if (labels_a.empty()) throw EmptyInput("no items to compare");
  const double n = static_cast<double>(labels_a.size());
  std::map<T, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    agree += labels_a[i] == labels_b[i] ? 1 : 0;
    ++marginals[labels_a[i]].first;
    ++marginals[labels_b[i]].second;
  }
  const double p_o = static_cast<double>(agree) / n;
  double p_e = 0.0;
  for (const auto& [_, m] : marginals)
    p_e += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

template <typename T>
double cohen_kappa(const std::vector<T>& labels_a, const std::vector<T>& labels_b) {
  return cohen_kappa(std::span<const T>(labels_a), std::span<const T>(labels_b));
}

}  // namespace contradial::metrics
