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

#include "reward_forge/kernels.h"

#include <string>

#include "reward_forge/error.h"

namespace reward_forge {

std::string_view ExecutionModeName(ExecutionMode mode) {
  return mode == ExecutionMode::kSerial ? "serial" : "parallel";
}

ExecutionMode ParseExecutionMode(std::string_view name) {
  if (name == "serial") return ExecutionMode::kSerial;
  if (name == "parallel") return ExecutionMode::kParallel;
  Fail(ErrorCode::kInvalidArgument,
       "execution mode must be \"serial\" or \"parallel\", got \"" + std::string(name) +
           "\"");
}

std::vector<double> ScoreResponses(const HeadParams& params, const EmbeddingStore& store,
                                   std::span<const ResponseSlot> slots,
                                   bool length_normalization, ExecutionMode mode) {
  if (mode == ExecutionMode::kParallel) {
    return kernels::ScoreResponsesParallel(params, store, slots, length_normalization);
  }
  return kernels::ScoreResponsesSerial(params, store, slots, length_normalization);
}

LossAndGrad TotalLossAndGrad(const TrainBatch& batch, const HeadParams& params,
                             const LossTerms& terms, ExecutionMode mode) {
  Require(terms.lambda >= 0.0, ErrorCode::kInvalidArgument,
          "lambda must be non-negative");
  if (mode == ExecutionMode::kParallel) {
    return kernels::PairLossAndGradParallel(params, batch, terms);
  }
  return kernels::PairLossAndGradSerial(params, batch, terms);
}

}  // namespace reward_forge
