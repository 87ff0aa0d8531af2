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

#include "contradial/metrics.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace {

using namespace contradial;
using namespace contradial::metrics;

constexpr double kTol = 1e-9;

std::string random_sentence(std::mt19937& rng, std::size_t max_len) {
  static const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "a", "dog",
                                              "b",   "said", "never", "Likes", "tea."};
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, vocab.size() - 1);
  std::string out;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + vocab[pick(rng)];
  return out;
}

// --- classification -------------------------------------------------------

TEST(Classification, FrozenConfusionExample) {
  const auto m = classification_metrics({4, 2, 1, 3});
  EXPECT_NEAR(m.accuracy, 0.7, 1e-6);
  EXPECT_NEAR(m.precision, 0.666667, 1e-6);
  EXPECT_NEAR(m.recall, 0.8, 1e-6);
  EXPECT_NEAR(m.f1, 0.727273, 1e-6);
}

TEST(Classification, ZeroDenominatorsAreZero) {
  const auto m = classification_metrics({0, 0, 0, 5});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_THROW(classification_metrics({}), EmptyEvaluation);
}

TEST(Classification, AbstainedOnlyWidensAccuracy) {
  const auto m = classification_metrics({4, 2, 1, 3}, 10);
  EXPECT_NEAR(m.accuracy, 7.0 / 20.0, kTol);
  EXPECT_NEAR(m.precision, 4.0 / 6.0, kTol);
  EXPECT_NEAR(m.recall, 0.8, kTol);
}

TEST(Classification, MatchesOracleOnRandomRuns) {
  std::mt19937 rng(1);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> pred(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<bool> gold;
    std::vector<int> p;
    ConfusionCounts c;
    std::size_t abstained = 0;
    const int n = 1 + trial % 30;
    for (int i = 0; i < n; ++i) {
      gold.push_back(coin(rng));
      p.push_back(pred(rng));
      const bool g = gold.back();
      const int v = p.back();
      // Unusable answers: a miss on positives, an abstention on negatives.
      if (g && v == 1) ++c.tp;
      else if (g) ++c.fn;
      else if (v == 1) ++c.fp;
      else if (v == 0) ++c.tn;
      else ++abstained;
    }
    const auto got = classification_metrics(c, abstained);
    const auto want = oracle::classify(gold, p);
    EXPECT_NEAR(got.accuracy, want.accuracy, kTol);
    EXPECT_NEAR(got.precision, want.precision, kTol);
    EXPECT_NEAR(got.recall, want.recall, kTol);
    EXPECT_NEAR(got.f1, want.f1, kTol);
  }
}

// --- BLEU-4 ---------------------------------------------------------------

TEST(Bleu, FrozenExample) {
  // Precisions 1, 3/4, 2/3, 1/2; geometric mean 0.707107; BP exp(-0.2).
  EXPECT_NEAR(oracle::bleu4("the cat sat on mat", "the cat sat on the mat"), 0.578930, 1e-6);
  EXPECT_NEAR(bleu4("the cat sat on mat", "the cat sat on the mat"), 0.578930, 1e-6);
}

TEST(Bleu, EdgeCases) {
  EXPECT_NEAR(bleu4("the cat sat on the mat", "the cat sat on the mat"), 1.0, kTol);
  EXPECT_EQ(bleu4("", "the cat"), 0.0);
  EXPECT_EQ(bleu4("dog", "the cat"), 0.0);
  // One token: only unigram precision, with brevity penalty exp(1 - 2).
  EXPECT_NEAR(bleu4("cat", "the cat"), std::exp(-1.0), kTol);
  // Case and punctuation are ignored by the tokenizer.
  EXPECT_NEAR(bleu4("The CAT, sat.", "the cat sat"), 1.0, kTol);
}

TEST(Bleu, MatchesOracleOnCuratedPairs) {
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"the cat sat on mat", "the cat sat on the mat"},
      {"a dog", "a dog sat"},
      {"the the the the", "the cat"},
      {"mat on sat cat the", "the cat sat on the mat"},
      {"b said never", "b said he never likes tea"},
      {"b never likes tea", "b likes tea"},
      {"cat cat cat sat", "cat sat"},
      {"one two three four five six", "one two three four five six seven eight"},
      {"x y", "y x"},
      {"b said b said b said", "b said"},
      {"the cat", "the cat"},
      {"tea", "tea"},
  };
  for (const auto& [c, r] : pairs) EXPECT_NEAR(bleu4(c, r), oracle::bleu4(c, r), kTol) << c << " | " << r;
}

TEST(Bleu, MatchesOracleOnRandomPairs) {
  std::mt19937 rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto c = random_sentence(rng, 12);
    const auto r = random_sentence(rng, 12);
    const double got = bleu4(c, r);
    EXPECT_NEAR(got, oracle::bleu4(c, r), kTol) << c << " | " << r;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0 + kTol);
  }
}

// --- ROUGE-L --------------------------------------------------------------

TEST(RougeL, FrozenExample) { EXPECT_NEAR(rouge_l("the cat sat", "the cat sat on the mat"), 0.666667, 1e-6); }

TEST(RougeL, EdgeCases) {
  EXPECT_EQ(rouge_l("", "the cat"), 0.0);
  EXPECT_EQ(rouge_l("dog", "cat"), 0.0);
  EXPECT_NEAR(rouge_l("a b c", "a b c"), 1.0, kTol);
  EXPECT_NEAR(rouge_l("c b a", "a b c"), 1.0 / 3.0, kTol);
}

TEST(RougeL, MatchesOracleOnCuratedPairs) {
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"the cat sat", "the cat sat on the mat"},
      {"a b c d", "a c b d"},
      {"b said never", "b never said"},
      {"x", "x x x"},
      {"the mat", "mat the"},
      {"one two three", "three two one"},
      {"a a a b", "a b a b"},
      {"b likes tea", "b said b likes green tea"},
      {"cat dog", "dog cat dog"},
      {"p q r s t", "t s r q p"},
      {"same words here", "same words here"},
  };
  for (const auto& [c, r] : pairs) EXPECT_NEAR(rouge_l(c, r), oracle::rouge_l(c, r), kTol) << c << " | " << r;
}

TEST(RougeL, MatchesOracleOnRandomPairs) {
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_sentence(rng, 10);
    const auto r = random_sentence(rng, 10);
    EXPECT_NEAR(rouge_l(c, r), oracle::rouge_l(c, r), kTol) << c << " | " << r;
    EXPECT_NEAR(rouge_l(c, r), rouge_l(r, c), kTol);
  }
}

// --- Cohen's kappa --------------------------------------------------------

TEST(Kappa, FrozenExamples) {
  // 4 yes/yes, 4 no/no, 1 yes/no, 1 no/yes.
  const std::vector<int> a{1, 1, 1, 1, 0, 0, 0, 0, 1, 0};
  const std::vector<int> b{1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
  EXPECT_NEAR(cohen_kappa(a, b), 0.6, 1e-6);
  const std::vector<int> yes(8, 1);
  const std::vector<int> alt{1, 0, 1, 0, 1, 0, 1, 0};
  EXPECT_NEAR(cohen_kappa(yes, alt), 0.0, 1e-12);
}

TEST(Kappa, Errors) {
  EXPECT_THROW(cohen_kappa(std::vector<int>{1, 0}, std::vector<int>{1}), LengthMismatch);
  EXPECT_THROW(cohen_kappa(std::vector<int>{}, std::vector<int>{}), EmptyInput);
}

TEST(Kappa, DegenerateAgreementIsOne) {
  EXPECT_EQ(cohen_kappa(std::vector<int>{2, 2, 2}, std::vector<int>{2, 2, 2}), 1.0);
}

TEST(Kappa, MatchesOracleAndIsSymmetric) {
  const std::vector<std::pair<std::vector<int>, std::vector<int>>> curated{
      {{0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}},
      {{0, 1, 2, 0, 1, 2}, {2, 0, 1, 2, 0, 1}},
      {{0, 0, 1, 1}, {0, 1, 0, 1}},
      {{1, 1, 1, 0}, {1, 1, 0, 0}},
      {{2, 2, 1, 0, 0}, {2, 1, 1, 0, 2}},
      {{0, 1}, {1, 0}},
      {{0, 0, 0, 1}, {0, 0, 0, 0}},
      {{1, 2, 3, 4}, {1, 2, 3, 4}},
      {{0, 1, 1, 1, 2}, {0, 1, 2, 1, 2}},
      {{1, 0, 1, 0, 1, 0}, {1, 1, 1, 0, 0, 0}},
  };
  for (const auto& [a, b] : curated) EXPECT_NEAR(cohen_kappa(a, b), oracle::kappa(a, b), kTol);

  std::mt19937 rng(4);
  std::uniform_int_distribution<int> cat(0, 2);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 25);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = cat(rng);
      b[i] = cat(rng);
    }
    const double k = cohen_kappa(a, b);
    EXPECT_NEAR(k, oracle::kappa(a, b), kTol);
    EXPECT_NEAR(k, cohen_kappa(b, a), kTol);
    EXPECT_LE(k, 1.0 + kTol);
  }
}

TEST(Kappa, StringLabels) {
  const std::vector<std::string> a{"valid", "invalid", "valid"};
  EXPECT_EQ(cohen_kappa(a, a), 1.0);
}

}  // namespace
