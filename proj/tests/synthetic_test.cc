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


#include "reward_forge/synthetic.h"

#include <cmath>

#include <gtest/gtest.h>

#include "reward_forge/checkpoint.h"
#include "reward_forge/error.h"
#include "test_util.h"

namespace reward_forge {
namespace {

double Dot(const std::vector<double>& w, std::span<const float> e) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * static_cast<long double>(e[i]);
  return static_cast<double>(s);
}

SyntheticSpec Spec(std::size_t pairs, double temperature, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dim = 8;
  spec.n_pairs = pairs;
  spec.noise_temperature = temperature;
  spec.seed = seed;
  spec.min_length = 5;
  spec.max_length = 9;
  spec.category_labels = {"x", "y", "z"};
  return spec;
}

TEST(SyntheticTest, SameSeedSameOutput) {
  const auto a = GenerateSynthetic(Spec(50, 0.5, 3));
  const auto b = GenerateSynthetic(Spec(50, 0.5, 3));
  EXPECT_EQ(a.store, b.store);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.oracle.weights, b.oracle.weights);
  EXPECT_NE(GenerateSynthetic(Spec(50, 0.5, 4)).oracle.weights, a.oracle.weights);
}

TEST(SyntheticTest, ShapeLengthsAndCategories) {
  const auto d = GenerateSynthetic(Spec(30, 0.5, 1));
  EXPECT_EQ(d.store.count(), 60u);
  EXPECT_EQ(d.store.dim(), 8u);
  ASSERT_EQ(d.records.size(), 30u);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    EXPECT_GE(r.chosen.token_length, 5);
    EXPECT_LE(r.rejected.token_length, 9);
    EXPECT_EQ(r.category, (std::vector<std::string>{"x", "y", "z"})[i % 3]);
    EXPECT_TRUE(ValidateDataset(d.records, &d.store).clean());
  }
}

TEST(SyntheticTest, ZeroTemperatureLimitLabelsByTrueReward) {
  const auto d = GenerateSynthetic(Spec(2000, 1e-12, 5));
  for (const auto& r : d.records) {
    EXPECT_GT(Dot(d.oracle.weights, d.store.Row(r.chosen.embedding_index)),
              Dot(d.oracle.weights, d.store.Row(r.rejected.embedding_index)));
  }
}

TEST(SyntheticTest, HugeTemperatureLabelsAreCoinFlips) {
  const auto d = GenerateSynthetic(Spec(10000, 1e9, 6));
  int agree = 0;
  for (const auto& r : d.records) {
    agree += Dot(d.oracle.weights, d.store.Row(r.chosen.embedding_index)) >
             Dot(d.oracle.weights, d.store.Row(r.rejected.embedding_index));
  }
  EXPECT_NEAR(agree / 10000.0, 0.5, 0.02);
}

// Empirical agreement matches the mean of sigmoid(|gap| / T) within 3 SE.
TEST(SyntheticTest, CalibrationAgainstSamplingLaw) {
  for (double temperature : {0.2, 1.0, 5.0}) {
    const auto d = GenerateSynthetic(Spec(20000, temperature, 7));
    double expected = 0.0;
    double variance = 0.0;
    int agree = 0;
    for (const auto& r : d.records) {
      const double gap = Dot(d.oracle.weights, d.store.Row(r.chosen.embedding_index)) -
                         Dot(d.oracle.weights, d.store.Row(r.rejected.embedding_index));
      const double p = 1.0 / (1.0 + std::exp(-std::fabs(gap) / temperature));
      expected += p;
      variance += p * (1 - p);
      agree += gap > 0;
    }
    const double n = static_cast<double>(d.records.size());
    EXPECT_NEAR(agree / n, expected / n, 3.0 * std::sqrt(variance) / n) << temperature;
    EXPECT_NEAR(BayesAccuracy(d.oracle, d.store, d.records), expected / n, 1e-12);
  }
}

TEST(SyntheticTest, DirectoryAndOracleRoundTrip) {
  rf_test::TempDir dir;
  const auto d = GenerateSynthetic(Spec(20, 0.3, 8));
  WriteSyntheticDirectory(dir.path(), d);
  const EmbeddingStore store = LoadEmbeddings(dir / "embeddings.bin");
  EXPECT_EQ(store, d.store);
  EXPECT_EQ(LoadManifest(dir / "manifest.jsonl", store), d.records);
  const SyntheticOracle oracle = OracleFromJson(ReadJsonFile(dir / "oracle.json"));
  EXPECT_EQ(oracle.weights, d.oracle.weights);
  EXPECT_EQ(oracle.spec.n_pairs, 20u);
  EXPECT_EQ(oracle.spec.category_labels, d.oracle.spec.category_labels);
}

TEST(SyntheticTest, RejectsInvalidSpecs) {
  EXPECT_THROW(GenerateSynthetic(Spec(0, 1.0, 1)), Error);
  EXPECT_THROW(GenerateSynthetic(Spec(5, 0.0, 1)), Error);
  SyntheticSpec bad = Spec(5, 1.0, 1);
  bad.min_length = 10;
  EXPECT_THROW(GenerateSynthetic(bad), Error);
  bad.min_length = 0;
  EXPECT_THROW(GenerateSynthetic(bad), Error);
}

}  // namespace
}  // namespace reward_forge
