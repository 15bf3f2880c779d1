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

// Pairwise (Bradley-Terry) ranking loss and its two optional regularizers.
//
// For a batch of N pairs with head rewards r_w (chosen) and r_l (rejected):
//
//   r~      = r / ln(l + 1)              if length normalization is on
//   ranking = mean_i softplus(-(r~_w,i - r~_l,i))   (= -mean log sigmoid(margin))
//   penalty = lambda * mean_i (r~_w,i + r~_l,i)^2
//   total   = ranking + penalty
//
// Normalization happens before the penalty, so with both enabled the penalty
// sees normalized rewards.

#ifndef REWARD_FORGE_LOSS_H_
#define REWARD_FORGE_LOSS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reward_forge/head.h"

namespace reward_forge {

double PairwiseRankingLoss(std::span<const double> rewards_chosen,
                           std::span<const double> rewards_rejected);

// reward / ln(length + 1); length must be >= 1.
double ApplyLengthNormalization(double reward, std::int64_t length);

double ZeroCoeffPenalty(std::span<const double> rewards_chosen,
                        std::span<const double> rewards_rejected, double lambda);

// The reward a head assigns to one response, optionally length-normalized.
// Every scoring path (evaluation, ensembles, RL rewards, the service) goes
// through this function.
double ScoreResponse(const HeadParams& params, std::span<const float> embedding,
                     std::int64_t token_length, bool length_normalization);

// Row-major matrices of widened embeddings plus token counts.
struct TrainBatch {
  std::size_t dim = 0;
  std::vector<double> chosen_embeddings;
  std::vector<double> rejected_embeddings;
  std::vector<std::int64_t> chosen_lengths;
  std::vector<std::int64_t> rejected_lengths;

  std::size_t rows() const { return chosen_lengths.size(); }
  std::span<const double> chosen_row(std::size_t i) const {
    return std::span<const double>(chosen_embeddings).subspan(i * dim, dim);
  }
  std::span<const double> rejected_row(std::size_t i) const {
    return std::span<const double>(rejected_embeddings).subspan(i * dim, dim);
  }
};

void ValidateTrainBatch(const TrainBatch& batch);

struct LossTerms {
  double lambda = 0.0;
  bool length_normalization = false;
};

struct LossAndGrad {
  double total = 0.0;
  double ranking = 0.0;
  double penalty = 0.0;
  HeadGradient grads;
};

}  // namespace reward_forge

#endif  // REWARD_FORGE_LOSS_H_
