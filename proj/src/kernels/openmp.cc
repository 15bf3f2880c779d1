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

// OpenMP kernels. Work is split per response / per pair; results land in
// per-index slots and are reduced afterwards in index order, which keeps the
// output identical to the serial reference.

#include <algorithm>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pair_terms.h"
#include "reward_forge/error.h"
#include "reward_forge/kernels.h"

namespace reward_forge::kernels {
namespace {

// Bounds the per-pair gradient buffers held at once.
constexpr std::size_t kReduceBlock = 256;

void CheckSlots(const HeadParams& params, const EmbeddingStore& store,
                std::span<const ResponseSlot> slots, bool length_normalization) {
  Require(store.dim() == params.config.input_dim, ErrorCode::kDimMismatch,
          "store dim " + std::to_string(store.dim()) + " != head input_dim " +
              std::to_string(params.config.input_dim));
  for (const ResponseSlot& s : slots) {
    Require(s.embedding_index < store.count(), ErrorCode::kOutOfRange,
            "embedding index " + std::to_string(s.embedding_index) + " out of range");
    if (length_normalization) {
      Require(s.token_length >= 1, ErrorCode::kInvalidArgument,
              "token length must be >= 1");
    }
  }
}

}  // namespace

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> ScoreResponsesParallel(const HeadParams& params,
                                           const EmbeddingStore& store,
                                           std::span<const ResponseSlot> slots,
                                           bool length_normalization) {
  CheckSlots(params, store, slots, length_normalization);
  std::vector<double> scores(slots.size());
  const auto n = static_cast<std::ptrdiff_t>(slots.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const ResponseSlot& s = slots[i];
    scores[i] = ScoreResponse(params, store.Row(s.embedding_index), s.token_length,
                              length_normalization);
  }
  return scores;
}

LossAndGrad PairLossAndGradParallel(const HeadParams& params, const TrainBatch& batch,
                                    const LossTerms& terms) {
  ValidateTrainBatch(batch);
  Require(batch.dim == params.config.input_dim, ErrorCode::kDimMismatch,
          "batch dim " + std::to_string(batch.dim) + " != head input_dim " +
              std::to_string(params.config.input_dim));
  const auto n = static_cast<std::ptrdiff_t>(batch.rows());
  std::vector<double> raw_chosen(n), raw_rejected(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    raw_chosen[i] = HeadForward(params, batch.chosen_row(i));
    raw_rejected[i] = HeadForward(params, batch.rejected_row(i));
  }
  const internal::PairUpstreams up =
      internal::ComputeUpstreams(batch, raw_chosen, raw_rejected, terms);
  LossAndGrad out{up.ranking + up.penalty, up.ranking, up.penalty, ZeroGradient(params)};

  std::vector<HeadGradient> block(std::min<std::size_t>(kReduceBlock, batch.rows()));
  for (std::ptrdiff_t start = 0; start < n;
       start += static_cast<std::ptrdiff_t>(kReduceBlock)) {
    const std::ptrdiff_t stop =
        std::min(n, start + static_cast<std::ptrdiff_t>(kReduceBlock));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = start; i < stop; ++i) {
      block[i - start] = internal::PairGradient(params, batch, i, up);
    }
    for (std::ptrdiff_t i = start; i < stop; ++i) {
      AccumulateGradient(out.grads, block[i - start]);
    }
  }
  return out;
}

}  // namespace reward_forge::kernels
