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

#include "reward_forge/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "reward_forge/error.h"
#include "reward_forge/metrics.h"

namespace reward_forge {

using nlohmann::json;

std::vector<std::string> ValidateTrainConfig(const TrainConfig& cfg) {
  // A zero rate is accepted: it is the "no learning" cell of a grid search.
  Require(cfg.learning_rate >= 0.0 && std::isfinite(cfg.learning_rate),
          ErrorCode::kInvalidArgument, "learning_rate must be finite and >= 0");
  Require(cfg.batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  Require(cfg.epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be >= 0");
  Require(cfg.lambda_zero_coeff >= 0.0 && std::isfinite(cfg.lambda_zero_coeff),
          ErrorCode::kInvalidArgument, "lambda_zero_coeff must be finite and >= 0");
  Require(cfg.optimizer.beta1 >= 0.0 && cfg.optimizer.beta1 < 1.0 &&
              cfg.optimizer.beta2 >= 0.0 && cfg.optimizer.beta2 < 1.0 &&
              cfg.optimizer.epsilon > 0.0,
          ErrorCode::kInvalidArgument, "optimizer betas must be in [0,1), epsilon > 0");
  if (cfg.early_stop_patience) {
    Require(*cfg.early_stop_patience >= 1, ErrorCode::kInvalidArgument,
            "early_stop_patience must be >= 1");
  }
  std::vector<std::string> warnings;
  if (cfg.lambda_zero_coeff > kLambdaSweepMax) {
    warnings.push_back(fmt::format(
        "lambda_zero_coeff {} is above the usual sweep range [0, {}]",
        cfg.lambda_zero_coeff, kLambdaSweepMax));
  }
  return warnings;
}

TrainBatch MakeBatch(const PreferenceSet& set, std::span<const std::size_t> positions) {
  const EmbeddingStore& store = *set.store;
  TrainBatch batch;
  batch.dim = store.dim();
  batch.chosen_embeddings.reserve(positions.size() * store.dim());
  batch.rejected_embeddings.reserve(positions.size() * store.dim());
  for (std::size_t pos : positions) {
    const PreferenceRecord& r = set.records.at(pos);
    const auto chosen = store.Row(r.chosen.embedding_index);
    const auto rejected = store.Row(r.rejected.embedding_index);
    batch.chosen_embeddings.insert(batch.chosen_embeddings.end(), chosen.begin(), chosen.end());
    batch.rejected_embeddings.insert(batch.rejected_embeddings.end(), rejected.begin(),
                                     rejected.end());
    batch.chosen_lengths.push_back(r.chosen.token_length);
    batch.rejected_lengths.push_back(r.rejected.token_length);
  }
  return batch;
}

namespace {

void CheckSet(const PreferenceSet& set, const HeadConfig& head_config, const char* name) {
  Require(set.store != nullptr, ErrorCode::kInvalidArgument,
          std::string(name) + " set has no embedding store");
  Require(!set.records.empty(), ErrorCode::kInvalidArgument,
          std::string(name) + " set is empty");
  Require(set.store->dim() == head_config.input_dim, ErrorCode::kDimMismatch,
          fmt::format("{} store dim {} != head input_dim {}", name, set.store->dim(),
                      head_config.input_dim));
}

double ValidationAccuracy(const HeadParams& params, const PreferenceSet& val,
                          const TrainConfig& cfg) {
  return OverallAccuracy(ScorePairs(params, *val.store, val.records,
                                    cfg.length_normalization, cfg.execution));
}

}  // namespace

TrainResult Train(const PreferenceSet& train_set, const PreferenceSet& val_set,
                  const HeadConfig& head_config, const TrainConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  ValidateHeadConfig(head_config);
  TrainReport report;
  report.warnings = ValidateTrainConfig(cfg);
  for (const std::string& w : report.warnings) spdlog::warn("{}", w);
  CheckSet(train_set, head_config, "training");
  CheckSet(val_set, head_config, "validation");

  HeadParams params = InitHead(head_config);
  AdamState state;
  const LossTerms terms{cfg.lambda_zero_coeff, cfg.length_normalization};

  std::vector<std::size_t> order(train_set.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.shuffle_seed);

  HeadParams best_params = params;
  double best_accuracy = -1.0;
  int epochs_without_gain = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const TrainBatch batch =
          MakeBatch(train_set, std::span<const std::size_t>(order).subspan(start, stop - start));
      LossAndGrad step = TotalLossAndGrad(batch, params, terms, cfg.execution);
      if (!std::isfinite(step.total)) {
        Fail(ErrorCode::kNonFiniteLoss,
             fmt::format("non-finite loss {} at step {} (epoch {})", step.total,
                         report.steps, epoch));
      }
      report.loss_curve.push_back(step.total);
      report.ranking_loss_curve.push_back(step.ranking);
      report.penalty_curve.push_back(step.penalty);
      auto [next, next_state] =
          OptimizerStep(params, step.grads, state, cfg.learning_rate, cfg.optimizer);
      params = std::move(next);
      state = std::move(next_state);
      ++report.steps;
    }
    const double accuracy = ValidationAccuracy(params, val_set, cfg);
    report.epoch_validation_accuracy.push_back(accuracy);
    spdlog::debug("epoch {}: validation accuracy {:.4f}", epoch, accuracy);
    if (cfg.early_stop_patience) {
      if (accuracy > best_accuracy) {
        best_accuracy = accuracy;
        best_params = params;
        epochs_without_gain = 0;
      } else if (++epochs_without_gain >= *cfg.early_stop_patience) {
        spdlog::info("early stop after epoch {}", epoch);
        break;
      }
    }
  }
  if (cfg.early_stop_patience && best_accuracy >= 0.0) params = std::move(best_params);

  report.final_validation_accuracy = ValidationAccuracy(params, val_set, cfg);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return TrainResult{std::move(params), std::move(report)};
}

GridSearchResult GridSearchLearningRate(const PreferenceSet& train_set,
                                        const PreferenceSet& val_set,
                                        const HeadConfig& head_config,
                                        const TrainConfig& base_cfg,
                                        std::span<const double> learning_rates) {
  Require(!learning_rates.empty(), ErrorCode::kInvalidArgument,
          "learning-rate grid is empty");
  GridSearchResult out;
  std::optional<std::size_t> best;
  for (double lr : learning_rates) {
    GridCell cell;
    cell.learning_rate = lr;
    TrainConfig cfg = base_cfg;
    cfg.learning_rate = lr;
    try {
      cell.result = Train(train_set, val_set, head_config, cfg);
    } catch (const Error& e) {
      spdlog::warn("learning rate {} failed: {}", lr, e.what());
      cell.error = e.what();
    }
    out.cells.push_back(std::move(cell));
    const GridCell& added = out.cells.back();
    if (!added.result) continue;
    const std::size_t index = out.cells.size() - 1;
    if (!best) {
      best = index;
      continue;
    }
    const GridCell& incumbent = out.cells[*best];
    const double acc = added.result->report.final_validation_accuracy;
    const double best_acc = incumbent.result->report.final_validation_accuracy;
    if (acc > best_acc || (acc == best_acc && lr < incumbent.learning_rate)) best = index;
  }
  Require(best.has_value(), ErrorCode::kInvalidArgument,
          "every learning-rate cell failed");
  out.best_index = *best;
  out.best_learning_rate = out.cells[*best].learning_rate;
  return out;
}

json TrainConfigToJson(const TrainConfig& cfg) {
  json j{{"learning_rate", cfg.learning_rate},
         {"batch_size", cfg.batch_size},
         {"epochs", cfg.epochs},
         {"lambda_zero_coeff", cfg.lambda_zero_coeff},
         {"length_normalization", cfg.length_normalization},
         {"optimizer",
          {{"beta1", cfg.optimizer.beta1},
           {"beta2", cfg.optimizer.beta2},
           {"epsilon", cfg.optimizer.epsilon}}},
         {"shuffle_seed", cfg.shuffle_seed},
         {"execution", std::string(ExecutionModeName(cfg.execution))}};
  j["early_stop_patience"] =
      cfg.early_stop_patience ? json(*cfg.early_stop_patience) : json(nullptr);
  return j;
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig cfg;
  try {
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.lambda_zero_coeff = j.value("lambda_zero_coeff", cfg.lambda_zero_coeff);
    cfg.length_normalization = j.value("length_normalization", cfg.length_normalization);
    if (auto it = j.find("optimizer"); it != j.end()) {
      cfg.optimizer.beta1 = it->value("beta1", cfg.optimizer.beta1);
      cfg.optimizer.beta2 = it->value("beta2", cfg.optimizer.beta2);
      cfg.optimizer.epsilon = it->value("epsilon", cfg.optimizer.epsilon);
    }
    cfg.shuffle_seed = j.value("shuffle_seed", cfg.shuffle_seed);
    if (auto it = j.find("early_stop_patience"); it != j.end() && !it->is_null()) {
      cfg.early_stop_patience = it->get<int>();
    }
    if (auto it = j.find("execution"); it != j.end()) {
      cfg.execution = ParseExecutionMode(it->get<std::string>());
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("train config: ") + e.what());
  }
  ValidateTrainConfig(cfg);
  return cfg;
}

json TrainReportToJson(const TrainReport& report) {
  return json{{"loss_curve", report.loss_curve},
              {"ranking_loss_curve", report.ranking_loss_curve},
              {"penalty_curve", report.penalty_curve},
              {"epoch_validation_accuracy", report.epoch_validation_accuracy},
              {"final_validation_accuracy", report.final_validation_accuracy},
              {"steps", report.steps},
              {"wall_time", report.wall_time_seconds},
              {"warnings", report.warnings}};
}

std::string LossCurveCsv(const TrainReport& report) {
  std::string out = "step,total,ranking,penalty\n";
  for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
    out += fmt::format("{},{},{},{}\n", i, report.loss_curve[i],
                       report.ranking_loss_curve[i], report.penalty_curve[i]);
  }
  return out;
}

}  // namespace reward_forge
