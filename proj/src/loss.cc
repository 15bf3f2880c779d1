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

#include "reward_forge/loss.h"

#include <cmath>
#include <string>

#include "reward_forge/error.h"
#include "reward_forge/numeric.h"

namespace reward_forge {
namespace {

void CheckPairVectors(std::span<const double> chosen, std::span<const double> rejected) {
  Require(!chosen.empty(), ErrorCode::kInvalidArgument, "empty reward vectors");
  Require(chosen.size() == rejected.size(), ErrorCode::kShapeMismatch,
          "chosen has " + std::to_string(chosen.size()) + " rewards, rejected has " +
              std::to_string(rejected.size()));
}

}  // namespace

double PairwiseRankingLoss(std::span<const double> rewards_chosen,
                           std::span<const double> rewards_rejected) {
  CheckPairVectors(rewards_chosen, rewards_rejected);
  double sum = 0.0;
  for (std::size_t i = 0; i < rewards_chosen.size(); ++i) {
    sum += Softplus(-(rewards_chosen[i] - rewards_rejected[i]));
  }
  return sum / static_cast<double>(rewards_chosen.size());
}

double ApplyLengthNormalization(double reward, std::int64_t length) {
  Require(length >= 1, ErrorCode::kInvalidArgument,
          "token length must be >= 1, got " + std::to_string(length));
  return reward / std::log(static_cast<double>(length) + 1.0);
}

double ZeroCoeffPenalty(std::span<const double> rewards_chosen,
                        std::span<const double> rewards_rejected, double lambda) {
  CheckPairVectors(rewards_chosen, rewards_rejected);
  Require(lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be non-negative");
  if (lambda == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rewards_chosen.size(); ++i) {
    const double s = rewards_chosen[i] + rewards_rejected[i];
    sum += s * s;
  }
  return lambda * (sum / static_cast<double>(rewards_chosen.size()));
}

double ScoreResponse(const HeadParams& params, std::span<const float> embedding,
                     std::int64_t token_length, bool length_normalization) {
  const double r = HeadForward(params, embedding);
  return length_normalization ? ApplyLengthNormalization(r, token_length) : r;
}

void ValidateTrainBatch(const TrainBatch& batch) {
  const std::size_t n = batch.rows();
  Require(n >= 1, ErrorCode::kInvalidArgument, "train batch is empty");
  Require(batch.dim > 0, ErrorCode::kInvalidArgument, "train batch dim is zero");
  Require(batch.rejected_lengths.size() == n &&
              batch.chosen_embeddings.size() == n * batch.dim &&
              batch.rejected_embeddings.size() == n * batch.dim,
          ErrorCode::kShapeMismatch, "train batch components have unequal row counts");
  for (std::size_t i = 0; i < n; ++i) {
    Require(batch.chosen_lengths[i] >= 1 && batch.rejected_lengths[i] >= 1,
            ErrorCode::kInvalidArgument,
            "train batch row " + std::to_string(i) + " has a token length < 1");
  }
}

}  // namespace reward_forge
