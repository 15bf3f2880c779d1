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
#include <random>

#include "reward_forge/checkpoint.h"
#include "reward_forge/error.h"
#include "reward_forge/numeric.h"

namespace reward_forge {

using nlohmann::json;

void ValidateSyntheticSpec(const SyntheticSpec& spec) {
  Require(spec.dim > 0, ErrorCode::kInvalidArgument, "synthetic dim must be positive");
  Require(spec.n_pairs > 0, ErrorCode::kInvalidArgument,
          "synthetic n_pairs must be positive");
  Require(spec.noise_temperature > 0.0 && std::isfinite(spec.noise_temperature),
          ErrorCode::kInvalidArgument, "noise_temperature must be positive and finite");
  Require(spec.min_length >= 1 && spec.min_length <= spec.max_length,
          ErrorCode::kInvalidArgument, "length_range must satisfy 1 <= min <= max");
}

double TrueReward(const SyntheticOracle& oracle, std::span<const float> embedding) {
  Require(embedding.size() == oracle.weights.size(), ErrorCode::kDimMismatch,
          "embedding dim " + std::to_string(embedding.size()) + " != oracle dim " +
              std::to_string(oracle.weights.size()));
  double r = 0.0;
  for (std::size_t i = 0; i < embedding.size(); ++i) r += oracle.weights[i] * embedding[i];
  return r;
}

SyntheticData GenerateSynthetic(const SyntheticSpec& spec) {
  ValidateSyntheticSpec(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> length(spec.min_length, spec.max_length);

  SyntheticOracle oracle{spec, std::vector<double>(spec.dim)};
  for (double& w : oracle.weights) w = normal(rng);

  const std::size_t count = 2 * spec.n_pairs;
  std::vector<float> data(count * spec.dim);
  for (float& v : data) v = static_cast<float>(normal(rng));
  EmbeddingStore store(spec.dim, count, std::move(data));

  std::vector<PreferenceRecord> records;
  records.reserve(spec.n_pairs);
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    const std::size_t a = 2 * i;
    const std::size_t b = 2 * i + 1;
    const double margin =
        (TrueReward(oracle, store.Row(a)) - TrueReward(oracle, store.Row(b))) /
        spec.noise_temperature;
    const bool a_wins = unit(rng) < Sigmoid(margin);
    PreferenceRecord r;
    r.id = spec.dataset_name + "-" + std::to_string(i);
    r.dataset_name = spec.dataset_name;
    r.modality = Modality::kText;
    r.category = spec.category_labels.empty()
                     ? std::string("general")
                     : spec.category_labels[i % spec.category_labels.size()];
    r.sample_id = r.id;
    r.chosen = ResponseRef{a_wins ? a : b, length(rng), std::nullopt};
    r.rejected = ResponseRef{a_wins ? b : a, length(rng), std::nullopt};
    records.push_back(std::move(r));
  }
  return SyntheticData{std::move(store), std::move(records), std::move(oracle)};
}

double BayesAccuracy(const SyntheticOracle& oracle, const EmbeddingStore& store,
                     std::span<const PreferenceRecord> records) {
  Require(!records.empty(), ErrorCode::kInvalidArgument,
          "Bayes accuracy needs at least one pair");
  double sum = 0.0;
  for (const PreferenceRecord& r : records) {
    const double gap = TrueReward(oracle, store.Row(r.chosen.embedding_index)) -
                       TrueReward(oracle, store.Row(r.rejected.embedding_index));
    sum += Sigmoid(std::fabs(gap) / oracle.spec.noise_temperature);
  }
  return sum / static_cast<double>(records.size());
}

json SyntheticSpecToJson(const SyntheticSpec& spec) {
  return json{{"dim", spec.dim},
              {"n_pairs", spec.n_pairs},
              {"noise_temperature", spec.noise_temperature},
              {"length_range", {spec.min_length, spec.max_length}},
              {"category_labels", spec.category_labels},
              {"seed", spec.seed},
              {"dataset_name", spec.dataset_name}};
}

SyntheticSpec SyntheticSpecFromJson(const json& j) {
  try {
    SyntheticSpec spec;
    spec.dim = j.at("dim").get<std::size_t>();
    spec.n_pairs = j.at("n_pairs").get<std::size_t>();
    spec.noise_temperature = j.at("noise_temperature").get<double>();
    const auto range = j.at("length_range").get<std::vector<std::int64_t>>();
    Require(range.size() == 2, ErrorCode::kParse, "length_range must have two entries");
    spec.min_length = range[0];
    spec.max_length = range[1];
    spec.category_labels = j.value("category_labels", std::vector<std::string>{"general"});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.dataset_name = j.value("dataset_name", std::string("synthetic"));
    ValidateSyntheticSpec(spec);
    return spec;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("synthetic spec: ") + e.what());
  }
}

json OracleToJson(const SyntheticOracle& oracle) {
  return json{{"spec", SyntheticSpecToJson(oracle.spec)}, {"weights", oracle.weights}};
}

SyntheticOracle OracleFromJson(const json& j) {
  try {
    SyntheticOracle oracle{SyntheticSpecFromJson(j.at("spec")),
                           j.at("weights").get<std::vector<double>>()};
    Require(oracle.weights.size() == oracle.spec.dim, ErrorCode::kShapeMismatch,
            "oracle weight count does not match spec dim");
    return oracle;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("oracle: ") + e.what());
  }
}

void WriteSyntheticDirectory(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  WriteEmbeddings(dir / "embeddings.bin", data.store);
  WriteManifest(dir / "manifest.jsonl", data.records);
  WriteTextFile(dir / "oracle.json", OracleToJson(data.oracle).dump(2) + "\n");
}

}  // namespace reward_forge
