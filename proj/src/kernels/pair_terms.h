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

// Internal to the kernels: the per-pair scalar work shared by the serial and
// OpenMP loss/gradient kernels. Only the head evaluations differ between them.

#ifndef REWARD_FORGE_SRC_KERNELS_PAIR_TERMS_H_
#define REWARD_FORGE_SRC_KERNELS_PAIR_TERMS_H_

#include <cmath>
#include <span>
#include <vector>

#include "reward_forge/loss.h"
#include "reward_forge/numeric.h"

namespace reward_forge::kernels::internal {

struct PairUpstreams {
  double ranking = 0.0;
  double penalty = 0.0;
  // d(total)/d(raw head output) for each chosen / rejected response.
  std::vector<double> chosen;
  std::vector<double> rejected;
};

inline PairUpstreams ComputeUpstreams(const TrainBatch& batch,
                                      std::span<const double> raw_chosen,
                                      std::span<const double> raw_rejected,
                                      const LossTerms& terms) {
  const std::size_t n = batch.rows();
  std::vector<double> chosen(raw_chosen.begin(), raw_chosen.end());
  std::vector<double> rejected(raw_rejected.begin(), raw_rejected.end());
  if (terms.length_normalization) {
    for (std::size_t i = 0; i < n; ++i) {
      chosen[i] = ApplyLengthNormalization(chosen[i], batch.chosen_lengths[i]);
      rejected[i] = ApplyLengthNormalization(rejected[i], batch.rejected_lengths[i]);
    }
  }
  PairUpstreams out;
  out.ranking = PairwiseRankingLoss(chosen, rejected);
  out.penalty = ZeroCoeffPenalty(chosen, rejected, terms.lambda);
  out.chosen.resize(n);
  out.rejected.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    // d softplus(-m)/dm = -sigmoid(-m)
    const double d_margin = -Sigmoid(-(chosen[i] - rejected[i])) * inv_n;
    double up_chosen = d_margin;
    double up_rejected = -d_margin;
    if (terms.lambda != 0.0) {
      const double d_sum = 2.0 * terms.lambda * (chosen[i] + rejected[i]) * inv_n;
      up_chosen += d_sum;
      up_rejected += d_sum;
    }
    if (terms.length_normalization) {
      up_chosen /= std::log(static_cast<double>(batch.chosen_lengths[i]) + 1.0);
      up_rejected /= std::log(static_cast<double>(batch.rejected_lengths[i]) + 1.0);
    }
    out.chosen[i] = up_chosen;
    out.rejected[i] = up_rejected;
  }
  return out;
}

inline HeadGradient PairGradient(const HeadParams& params, const TrainBatch& batch,
                                 std::size_t i, const PairUpstreams& up) {
  HeadGradient g = HeadGradientOf(params, batch.chosen_row(i), up.chosen[i]);
  AccumulateGradient(g, HeadGradientOf(params, batch.rejected_row(i), up.rejected[i]));
  return g;
}

}  // namespace reward_forge::kernels::internal

#endif  // REWARD_FORGE_SRC_KERNELS_PAIR_TERMS_H_
