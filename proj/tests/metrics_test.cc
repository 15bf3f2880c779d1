// Copyright 2026 The RewardForge Authors.
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


#include "reward_forge/metrics.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "reward_forge/error.h"
#include "reward_forge/synthetic.h"
#include "test_util.h"

namespace reward_forge {
namespace {

ScoredPair Pair(double w, double l, std::string category = "c",
                std::optional<std::string> sample = std::nullopt) {
  static int counter = 0;
  return ScoredPair{"p" + std::to_string(counter++), w, l, std::move(category), std::move(sample)};
}

TEST(PairCorrectTest, StrictOrderingWithTiesWrong) {
  EXPECT_TRUE(PairCorrect(Pair(1.0, 0.0)));
  EXPECT_FALSE(PairCorrect(Pair(0.0, 0.0)));
  EXPECT_FALSE(PairCorrect(Pair(-2.0, -1.0)));
}

TEST(OverallTest, CountsCorrectPairs) {
  EXPECT_EQ(OverallAccuracy(std::vector{Pair(1, 0), Pair(2, 1), Pair(3, 0), Pair(0, 1)}), 0.75);
  EXPECT_EQ(OverallAccuracy(std::vector{Pair(1, 0), Pair(2, 1)}), 1.0);
  EXPECT_EQ(OverallAccuracy(std::vector{Pair(1, 1), Pair(2, 2)}), 0.0);
  EXPECT_THROW(OverallAccuracy(std::vector<ScoredPair>{}), Error);
}

TEST(MacroTest, AveragesCategories) {
  const std::vector pairs{Pair(1, 0, "A"), Pair(0, 1, "B"), Pair(0, 1, "B"), Pair(0, 1, "B")};
  EXPECT_EQ(MacroAccuracy(pairs), 0.5);
  EXPECT_EQ(OverallAccuracy(pairs), 0.25);
}

TEST(MacroTest, EqualsOverallOnBalancedAndSingleCategory) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 300; ++trial) {
    const int per_category = 1 + static_cast<int>(rng() % 40);
    const int categories = 1 + static_cast<int>(rng() % 9);
    std::vector<ScoredPair> pairs;
    for (int c = 0; c < categories; ++c) {
      for (int i = 0; i < per_category; ++i) {
        pairs.push_back(Pair(normal(rng), normal(rng), "c" + std::to_string(c)));
      }
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    EXPECT_EQ(MacroAccuracy(pairs), OverallAccuracy(pairs));
  }
}

TEST(AccPlusTest, GroupsBySample) {
  const std::vector pairs{Pair(1, 0, "c", "A"), Pair(1, 0, "c", "A"), Pair(1, 0, "c", "B"),
                          Pair(0, 1, "c", "B")};
  EXPECT_EQ(AccPlus(pairs), 0.5);
  EXPECT_EQ(OverallAccuracy(pairs), 0.75);
  const std::vector singles{Pair(1, 0, "c", "A"), Pair(0, 1, "c", "B"), Pair(3, 0, "c", "C")};
  EXPECT_EQ(AccPlus(singles), OverallAccuracy(singles));
  const std::vector all{Pair(1, 0, "c", "A"), Pair(2, 0, "c", "A")};
  EXPECT_EQ(AccPlus(all), 1.0);
  EXPECT_THROW(AccPlus(std::vector{Pair(1, 0)}), Error);
}

TEST(BuildReportTest, AccPlusOnlyWhenEveryPairIsGrouped) {
  EXPECT_FALSE(BuildReport(std::vector{Pair(1, 0, "c", "A"), Pair(1, 0)}).acc_plus.has_value());
  const EvalReport r = BuildReport(std::vector{Pair(1, 0, "x", "A"), Pair(0, 1, "y", "A")});
  ASSERT_TRUE(r.acc_plus.has_value());
  EXPECT_EQ(*r.acc_plus, 0.0);
  EXPECT_EQ(r.n_samples, 1u);
  EXPECT_EQ(r.n_pairs, 2u);
  EXPECT_EQ(r.per_category.at("x").n, 1u);
  EXPECT_EQ(r.per_category.at("y").accuracy, 0.0);
  EXPECT_EQ(r.acc, r.overall_acc);
  EXPECT_THROW(BuildReport(std::vector{Pair(std::nan(""), 0)}), Error);
}

TEST(MetricPropertyTest, ExhaustiveSmallSamplesMatchBruteForce) {
  for (const auto& sizes : std::vector<std::vector<int>>{
           {1}, {2}, {3}, {4}, {1, 1, 1}, {2, 2}, {3, 3}, {4, 4}, {1, 2}, {2, 3}, {4, 1}}) {
    const bool equal_sizes = std::all_of(sizes.begin(), sizes.end(),
                                         [&](int k) { return k == sizes.front(); });
    rf_test::ForEachOutcomePattern(sizes, [&](const std::vector<ScoredPair>& pairs) {
      const auto brute = rf_test::BruteForceMetrics(pairs);
      const EvalReport r = BuildReport(pairs);
      ASSERT_EQ(r.overall_acc, brute.overall);
      ASSERT_EQ(r.macro_acc, brute.macro);
      ASSERT_EQ(*r.acc_plus, brute.acc_plus);
      ASSERT_LE(*r.acc_plus, brute.sample_mean);
      if (equal_sizes) {
        ASSERT_LE(*r.acc_plus, r.acc);
      }
    });
  }
}

// Acc+ <= Acc needs equal sample sizes: one right singleton sample and one
// wrong two-pair sample give Acc = 1/3 but Acc+ = 1/2.
TEST(MetricPropertyTest, AccPlusCanExceedAccWithUnequalSamples) {
  const std::vector pairs{Pair(1, 0, "c", "A"), Pair(0, 1, "c", "B"), Pair(0, 1, "c", "B")};
  EXPECT_EQ(AccPlus(pairs), 0.5);
  EXPECT_EQ(OverallAccuracy(pairs), 1.0 / 3.0);
}

TEST(MetricPropertyTest, MonotoneTransformAndPermutationInvariance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredPair> pairs;
    for (int i = 0; i < 30; ++i) {
      pairs.push_back(Pair(normal(rng), normal(rng), "c" + std::to_string(i % 4),
                           "s" + std::to_string(i % 11)));
    }
    const EvalReport base = BuildReport(pairs);
    auto transformed = pairs;
    for (auto& p : transformed) {
      p.reward_chosen = std::exp(3.0 * p.reward_chosen) - 7.0;
      p.reward_rejected = std::exp(3.0 * p.reward_rejected) - 7.0;
    }
    EXPECT_EQ(BuildReport(transformed), base);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    EXPECT_EQ(BuildReport(pairs), base);
  }
}

TEST(EvalModelTest, RandomHeadIsAtChance) {
  SyntheticSpec spec;
  spec.dim = 16;
  spec.n_pairs = 10000;
  spec.seed = 3;
  const auto data = GenerateSynthetic(spec);
  HeadConfig cfg;
  cfg.input_dim = 16;
  cfg.seed = 99;
  const EvalReport r = EvalModel(InitHead(cfg), data.records, data.store, false);
  EXPECT_NEAR(r.overall_acc, 0.5, 0.05);
  EXPECT_EQ(EvalModel(InitHead(cfg), data.records, data.store, false), r);
  EXPECT_EQ(EvalModel(InitHead(cfg), data.records, data.store, false, ExecutionMode::kParallel), r);
}

TEST(EvalModelTest, TrueRewardHeadIsPerfectAtZeroTemperature) {
  SyntheticSpec spec;
  spec.dim = 8;
  spec.n_pairs = 2000;
  spec.noise_temperature = 1e-12;
  const auto data = GenerateSynthetic(spec);
  HeadConfig cfg;
  cfg.input_dim = 8;
  cfg.layer_count = 1;
  HeadParams oracle = InitHead(cfg);
  oracle.layers[0].weights = data.oracle.weights;
  EXPECT_EQ(EvalModel(oracle, data.records, data.store, false).overall_acc, 1.0);
}

TEST(ReportFormatTest, JsonAndTable) {
  const EvalReport r = BuildReport(std::vector{Pair(1, 0, "alpha", "A"), Pair(0, 1, "beta", "B")});
  const auto j = EvalReportToJson(r);
  EXPECT_EQ(j["overall_acc"], 0.5);
  EXPECT_EQ(j["acc_plus"], 0.5);
  EXPECT_EQ(j["per_category"]["alpha"]["n"], 1);
  const std::string table = EvalReportToTable(r);
  EXPECT_NE(table.find("alpha"), std::string::npos);
  EXPECT_NE(table.find("macro_acc"), std::string::npos);
}

}  // namespace
}  // namespace reward_forge
