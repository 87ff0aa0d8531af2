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

#include "contradial/scoring.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "local_server.hpp"
#include "oracles.hpp"

namespace {

using namespace contradial;
using namespace contradial::scoring;

const LexicalF1Scorer kF1;
const LogPrecisionScorer kLogP;

TEST(Scoring, FrozenExample) {
  const auto r = score_explanation("b contradicts earlier statement", "b contradicts their earlier claim", kF1, kLogP);
  EXPECT_NEAR(r.s1, 0.666667, 1e-6);
  EXPECT_NEAR(r.s2, -0.223144, 1e-6);
  EXPECT_NEAR(r.combined, 0.644352, 1e-6);
  EXPECT_EQ(r.eta, 0.1);
  EXPECT_FALSE(r.flagged);
}

TEST(Scoring, IdentityIsExactlyOne) {
  for (const std::string s : {"b says they never cook", "x", "A: one, two; two!"}) {
    const auto r = score_explanation(s, s, kF1, kLogP);
    EXPECT_EQ(r.s1, 1.0);
    EXPECT_EQ(r.s2, 0.0);
    EXPECT_EQ(r.combined, 1.0);
  }
}

TEST(Scoring, EtaBoundsAndEmptyReference) {
  EXPECT_THROW(score_explanation("a", "a", kF1, kLogP, 0.0), ConfigError);
  EXPECT_THROW(score_explanation("a", "a", kF1, kLogP, 1.0), ConfigError);
  EXPECT_THROW(score_explanation("a", "a", kF1, kLogP, 1.5), ConfigError);
  EXPECT_THROW(score_explanation("a", "   ", kF1, kLogP), EmptyReference);
  EXPECT_NO_THROW(score_explanation("a", "a", kF1, kLogP, 0.5));
}

TEST(Scoring, BuiltinsRange) {
  std::mt19937 rng(5);
  static const std::vector<std::string> vocab{"b", "says", "never", "cook", "pasta", "a", "later"};
  std::uniform_int_distribution<std::size_t> len(0, 8), pick(0, vocab.size() - 1);
  auto sentence = [&] {
    std::string s;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + vocab[pick(rng)];
    return s;
  };
  for (int i = 0; i < 300; ++i) {
    const auto c = sentence(), r = sentence();
    const double f = lexical_f1(c, r);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_NEAR(f, lexical_f1(r, c), 1e-12);
    EXPECT_LE(log_precision(c, r), 0.0);
  }
}

TEST(PAlpha, FrozenExample) {
  const std::vector<double> s{0.70, 0.66, 0.64, 0.50};
  EXPECT_EQ(p_alpha(s, 0.6), 75.0);
  EXPECT_EQ(p_alpha(s, 0.65), 50.0);
  EXPECT_EQ(p_alpha(s, 0.7), 0.0);
  EXPECT_THROW(p_alpha(std::vector<double>{}, 0.5), EmptyScores);
}

TEST(PAlpha, NonIncreasingInAlpha) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s(1 + static_cast<std::size_t>(t % 40));
    for (auto& v : s) v = u(rng);
    std::vector<double> alphas(8);
    for (auto& a : alphas) a = u(rng);
    std::sort(alphas.begin(), alphas.end());
    double prev = 101.0;
    for (double a : alphas) {
      const double p = p_alpha(s, a);
      EXPECT_LE(p, prev);
      EXPECT_EQ(p, oracle::p_alpha(s, a));
      prev = p;
    }
  }
}

TEST(Satisfactory, StrictThreshold) {
  ScoreRecord r;
  r.combined = 0.65;
  EXPECT_FALSE(satisfactory(r));
  r.combined = 0.650001;
  EXPECT_TRUE(satisfactory(r));
  EXPECT_FALSE(satisfactory(r, 0.7));
}

TEST(Calibration, FrozenExamples) {
  const auto grid = default_grid();
  auto one = [&](double invalid) {
    return calibrate_tau({{invalid, false}, {0.9, true}}, grid);
  };
  auto c = one(0.63);
  EXPECT_DOUBLE_EQ(c.tau, 0.65);
  EXPECT_FALSE(c.saturated);
  EXPECT_DOUBLE_EQ(c.max_invalid, 0.63);
  EXPECT_DOUBLE_EQ(one(0.49).tau, 0.50);
  c = one(0.95);
  EXPECT_DOUBLE_EQ(c.tau, 0.80);
  EXPECT_TRUE(c.saturated);
  // A point exactly on a grid value is not above it.
  EXPECT_DOUBLE_EQ(one(0.60).tau, 0.60);
}

TEST(Calibration, Errors) {
  EXPECT_THROW(calibrate_tau({{0.5, false}}, {}), EmptyGrid);
  EXPECT_THROW(calibrate_tau({{0.5, true}}, default_grid()), NoInvalidPoints);
  EXPECT_THROW(calibrate_tau({}, default_grid()), NoInvalidPoints);
  EXPECT_THROW(calibrate_tau({{0.5, false}}, {0.7, 0.6}), ConfigError);
}

TEST(Calibration, ExcludesEveryInvalidPointUnlessSaturated) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const auto grid = default_grid();
  for (int t = 0; t < 500; ++t) {
    std::vector<CalibrationPoint> pts(1 + static_cast<std::size_t>(t % 20));
    for (auto& p : pts) p = {u(rng), coin(rng)};
    pts[0].valid = false;
    const auto c = calibrate_tau(pts, grid);
    if (!c.saturated) {
      for (const auto& p : pts)
        if (!p.valid) EXPECT_LE(p.combined, c.tau);
      // Smallest such grid value.
      const auto it = std::find(grid.begin(), grid.end(), c.tau);
      if (it != grid.begin()) EXPECT_GT(c.max_invalid, *(it - 1));
    } else {
      EXPECT_GT(c.max_invalid, grid.back());
    }
  }
}

TEST(Histogram, Buckets) {
  const std::vector<double> v{0.70, 0.66, 0.64, 0.50};
  const auto h = histogram(v, 0.05);
  ASSERT_EQ(h.size(), 5u);
  EXPECT_NEAR(h.front().lower, 0.50, 1e-12);
  EXPECT_EQ(h[0].count, 1u);
  EXPECT_EQ(h[1].count, 0u);
  EXPECT_EQ(h[2].count, 1u);  // [0.60, 0.65)
  EXPECT_EQ(h[3].count, 1u);  // [0.65, 0.70)
  EXPECT_EQ(h[4].count, 1u);  // [0.70, 0.75)
  std::size_t total = 0;
  for (const auto& b : h) total += b.count;
  EXPECT_EQ(total, v.size());
  EXPECT_TRUE(histogram(std::vector<double>{}, 0.05).empty());
  EXPECT_THROW(histogram(v, 0.0), ConfigError);
}

TEST(ScoreReport, AggregatesAndRoundTrips) {
  std::vector<ScoreRecord> recs;
  for (double c : {0.70, 0.66, 0.64, 0.50}) {
    ScoreRecord r;
    r.s1 = c;
    r.combined = c;
    recs.push_back(r);
  }
  recs.back().flagged = true;
  const auto rep = score_report(recs);
  EXPECT_EQ(rep.count, 4u);
  EXPECT_EQ(rep.flagged, 1u);
  ASSERT_EQ(rep.p_alpha.size(), 3u);
  EXPECT_EQ(rep.p_alpha[0].percentage, 75.0);
  EXPECT_EQ(rep.p_alpha[1].percentage, 50.0);
  EXPECT_EQ(rep.p_alpha[2].percentage, 0.0);
  EXPECT_NEAR(rep.mean_combined, 0.625, 1e-12);
  const auto back = report_from_json(json::parse(report_to_json(rep).dump()));
  EXPECT_EQ(report_to_json(back).dump(), report_to_json(rep).dump());
  EXPECT_THROW(score_report({}), EmptyScores);
}

TEST(RemoteScorer, PostsCandidateAndReference) {
  fixtures::LocalServer srv;
  json seen;
  srv.server().Post("/bert/score", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"score": 0.83})", "application/json");
  });
  srv.start();
  const auto s = make_scorer({ScorerSlot::s1, ScorerKind::remote, srv.url() + "/bert"});
  EXPECT_DOUBLE_EQ(s->score("cand", "ref"), 0.83);
  EXPECT_EQ(seen["candidate"], "cand");
  EXPECT_EQ(seen["reference"], "ref");
  const auto r = score_explanation("cand", "ref", *s, kLogP, 0.1);
  EXPECT_NEAR(r.combined, 0.83 + 0.1 * log_precision("cand", "ref"), 1e-12);
}

TEST(RemoteScorer, FailuresAreFatal) {
  fixtures::LocalServer srv;
  srv.server().Post("/bad/score", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"value": 1})", "application/json");
  });
  srv.server().Post("/down/score", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  srv.start();
  RemoteScorer bad(srv.url() + "/bad", ScorerSlot::s2);
  RemoteScorer down(srv.url() + "/down", ScorerSlot::s1);
  EXPECT_THROW(bad.score("a", "b"), RemoteScorerFailure);
  EXPECT_THROW(down.score("a", "b"), RemoteScorerFailure);
  try {
    bad.score("a", "b");
  } catch (const RemoteScorerFailure& e) {
    EXPECT_NE(std::string(e.what()).find("s2"), std::string::npos);
  }
  EXPECT_THROW(make_scorer({ScorerSlot::s1, ScorerKind::remote, std::nullopt}), ConfigError);
}

}  // namespace
