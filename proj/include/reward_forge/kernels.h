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

// Batch kernels: scoring many responses and the batch loss/gradient.
//
// Each kernel has a serial reference (kernels/serial.cc) and an OpenMP
// version (kernels/openmp.cc). The OpenMP versions parallelize over pairs or
// responses only; every reduction is then summed sequentially in index order,
// so both versions return bit-identical results for any thread count.

#ifndef REWARD_FORGE_KERNELS_H_
#define REWARD_FORGE_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "reward_forge/data.h"
#include "reward_forge/head.h"
#include "reward_forge/loss.h"

namespace reward_forge {

enum class ExecutionMode { kSerial, kParallel };

std::string_view ExecutionModeName(ExecutionMode mode);
ExecutionMode ParseExecutionMode(std::string_view name);

struct ResponseSlot {
  std::size_t embedding_index = 0;
  std::int64_t token_length = 1;
};

namespace kernels {

std::vector<double> ScoreResponsesSerial(const HeadParams& params,
                                         const EmbeddingStore& store,
                                         std::span<const ResponseSlot> slots,
                                         bool length_normalization);
std::vector<double> ScoreResponsesParallel(const HeadParams& params,
                                           const EmbeddingStore& store,
                                           std::span<const ResponseSlot> slots,
                                           bool length_normalization);

LossAndGrad PairLossAndGradSerial(const HeadParams& params, const TrainBatch& batch,
                                  const LossTerms& terms);
LossAndGrad PairLossAndGradParallel(const HeadParams& params, const TrainBatch& batch,
                                    const LossTerms& terms);

// Threads the OpenMP build will use; 1 without OpenMP.
int MaxThreads();

}  // namespace kernels

std::vector<double> ScoreResponses(const HeadParams& params, const EmbeddingStore& store,
                                   std::span<const ResponseSlot> slots,
                                   bool length_normalization,
                                   ExecutionMode mode = ExecutionMode::kSerial);

// Total loss (ranking + zero-coefficient penalty, on length-normalized
// rewards when enabled) and its exact gradient with respect to the head.
LossAndGrad TotalLossAndGrad(const TrainBatch& batch, const HeadParams& params,
                             const LossTerms& terms,
                             ExecutionMode mode = ExecutionMode::kSerial);

}  // namespace reward_forge

#endif  // REWARD_FORGE_KERNELS_H_
