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

#ifndef REWARD_FORGE_TRAINER_H_
#define REWARD_FORGE_TRAINER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reward_forge/data.h"
#include "reward_forge/head.h"
#include "reward_forge/kernels.h"
#include "reward_forge/loss.h"
#include "reward_forge/optimizer.h"

namespace reward_forge {

// Defaults are sized for training a head on frozen embeddings.
struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  int epochs = 3;
  double lambda_zero_coeff = 0.0;
  bool length_normalization = false;
  AdamConfig optimizer;
  std::uint64_t shuffle_seed = 0;
  // Stop after this many epochs without a validation-accuracy improvement
  // and keep the best epoch's parameters.
  std::optional<int> early_stop_patience;
  ExecutionMode execution = ExecutionMode::kSerial;
};

inline constexpr double kLambdaSweepMax = 0.1;

// Throws on invalid values; returns warnings (e.g. lambda above the usual
// [0, 0.1] sweep) that are allowed but worth flagging.
std::vector<std::string> ValidateTrainConfig(const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> loss_curve;
  std::vector<double> ranking_loss_curve;
  std::vector<double> penalty_curve;
  std::vector<double> epoch_validation_accuracy;
  double final_validation_accuracy = 0.0;
  std::int64_t steps = 0;
  double wall_time_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct TrainResult {
  HeadParams params;
  TrainReport report;
};

// Gathers widened rows for the given record positions.
TrainBatch MakeBatch(const PreferenceSet& set, std::span<const std::size_t> positions);

TrainResult Train(const PreferenceSet& train_set, const PreferenceSet& val_set,
                  const HeadConfig& head_config, const TrainConfig& cfg);

struct GridCell {
  double learning_rate = 0.0;
  std::optional<TrainResult> result;
  std::optional<std::string> error;
};

struct GridSearchResult {
  double best_learning_rate = 0.0;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;
};

// One training run per learning rate; picks the highest final validation
// accuracy, ties going to the smaller rate. Failed cells are recorded and
// skipped. Throws only if every cell fails.
GridSearchResult GridSearchLearningRate(const PreferenceSet& train_set,
                                        const PreferenceSet& val_set,
                                        const HeadConfig& head_config,
                                        const TrainConfig& base_cfg,
                                        std::span<const double> learning_rates);

inline constexpr double kPaperLearningRateGrid[] = {1e-5, 3e-6, 1e-6, 3e-7};

nlohmann::json TrainConfigToJson(const TrainConfig& cfg);
// Missing keys keep their defaults.
TrainConfig TrainConfigFromJson(const nlohmann::json& j);
nlohmann::json TrainReportToJson(const TrainReport& report);
// step,total,ranking,penalty
std::string LossCurveCsv(const TrainReport& report);

}  // namespace reward_forge

#endif  // REWARD_FORGE_TRAINER_H_
