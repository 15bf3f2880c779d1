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

// Synthetic preference data with a known linear ground-truth reward.
//
// A weight vector w* ~ N(0, I) is drawn, every response embedding e ~ N(0, I)
// gets true reward r*(e) = w* . e, and each pair (a, b) is labelled by a
// Bradley-Terry draw: a is chosen with probability sigmoid((r*_a - r*_b) / T).
// The Bayes-optimal classifier picks the higher true reward, so its expected
// accuracy on a set of pairs is mean(sigmoid(|r*_a - r*_b| / T)).

#ifndef REWARD_FORGE_SYNTHETIC_H_
#define REWARD_FORGE_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reward_forge/data.h"

namespace reward_forge {

struct SyntheticSpec {
  std::size_t dim = 32;
  std::size_t n_pairs = 5000;
  double noise_temperature = 0.2;
  std::int64_t min_length = 1;
  std::int64_t max_length = 512;
  std::vector<std::string> category_labels{"general"};
  std::uint64_t seed = 0;
  std::string dataset_name = "synthetic";
};

void ValidateSyntheticSpec(const SyntheticSpec& spec);

struct SyntheticOracle {
  SyntheticSpec spec;
  std::vector<double> weights;  // w*
};

struct SyntheticData {
  EmbeddingStore store;
  std::vector<PreferenceRecord> records;
  SyntheticOracle oracle;
};

SyntheticData GenerateSynthetic(const SyntheticSpec& spec);

double TrueReward(const SyntheticOracle& oracle, std::span<const float> embedding);

// Expected accuracy of the true-reward ordering on the given pairs.
double BayesAccuracy(const SyntheticOracle& oracle, const EmbeddingStore& store,
                     std::span<const PreferenceRecord> records);

nlohmann::json SyntheticSpecToJson(const SyntheticSpec& spec);
SyntheticSpec SyntheticSpecFromJson(const nlohmann::json& j);
nlohmann::json OracleToJson(const SyntheticOracle& oracle);
SyntheticOracle OracleFromJson(const nlohmann::json& j);

// Writes embeddings.bin, manifest.jsonl and oracle.json into dir.
void WriteSyntheticDirectory(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace reward_forge

#endif  // REWARD_FORGE_SYNTHETIC_H_
