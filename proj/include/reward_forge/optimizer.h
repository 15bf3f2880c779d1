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

#ifndef REWARD_FORGE_OPTIMIZER_H_
#define REWARD_FORGE_OPTIMIZER_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "reward_forge/head.h"

namespace reward_forge {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates over the flattened parameter vector. A default-constructed
// state is "fresh" and is sized on the first step.
struct AdamState {
  std::int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
std::pair<HeadParams, AdamState> OptimizerStep(const HeadParams& params,
                                               const HeadGradient& grads,
                                               const AdamState& state,
                                               double learning_rate,
                                               const AdamConfig& adam);

}  // namespace reward_forge

#endif  // REWARD_FORGE_OPTIMIZER_H_
