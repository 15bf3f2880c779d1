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

// Serial reference kernels. These define the expected results; the OpenMP
// kernels are tested for bit-equality against them.

#include <string>

#include "pair_terms.h"
#include "reward_forge/error.h"
#include "reward_forge/kernels.h"

namespace reward_forge::kernels {

std::vector<double> ScoreResponsesSerial(const HeadParams& params,
                                         const EmbeddingStore& store,
                                         std::span<const ResponseSlot> slots,
                                         bool length_normalization) {
  std::vector<double> scores(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    scores[i] = ScoreResponse(params, store.Row(slots[i].embedding_index),
                              slots[i].token_length, length_normalization);
  }
  return scores;
}

LossAndGrad PairLossAndGradSerial(const HeadParams& params, const TrainBatch& batch,
                                  const LossTerms& terms) {
  ValidateTrainBatch(batch);
  Require(batch.dim == params.config.input_dim, ErrorCode::kDimMismatch,
          "batch dim " + std::to_string(batch.dim) + " != head input_dim " +
              std::to_string(params.config.input_dim));
  const std::size_t n = batch.rows();
  std::vector<double> raw_chosen(n), raw_rejected(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw_chosen[i] = HeadForward(params, batch.chosen_row(i));
    raw_rejected[i] = HeadForward(params, batch.rejected_row(i));
  }
  const internal::PairUpstreams up =
      internal::ComputeUpstreams(batch, raw_chosen, raw_rejected, terms);
  LossAndGrad out{up.ranking + up.penalty, up.ranking, up.penalty, ZeroGradient(params)};
  for (std::size_t i = 0; i < n; ++i) {
    AccumulateGradient(out.grads, internal::PairGradient(params, batch, i, up));
  }
  return out;
}

}  // namespace reward_forge::kernels
