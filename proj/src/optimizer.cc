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

#include "reward_forge/optimizer.h"

#include <cmath>
#include <string>

#include "reward_forge/error.h"

namespace reward_forge {

std::pair<HeadParams, AdamState> OptimizerStep(const HeadParams& params,
                                               const HeadGradient& grads,
                                               const AdamState& state,
                                               double learning_rate,
                                               const AdamConfig& adam) {
  std::vector<double> theta = FlattenParams(params);
  const std::vector<double> g = FlattenGradient(grads);
  Require(g.size() == theta.size(), ErrorCode::kShapeMismatch,
          "gradient has " + std::to_string(g.size()) + " entries, params have " +
              std::to_string(theta.size()));
  AdamState next = state;
  if (next.step == 0 && next.first_moment.empty()) {
    next.first_moment.assign(theta.size(), 0.0);
    next.second_moment.assign(theta.size(), 0.0);
  }
  Require(next.first_moment.size() == theta.size() &&
              next.second_moment.size() == theta.size(),
          ErrorCode::kShapeMismatch, "optimizer state does not match parameter count");
  ++next.step;
  const double t = static_cast<double>(next.step);
  const double correction1 = 1.0 - std::pow(adam.beta1, t);
  const double correction2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double& m = next.first_moment[i];
    double& v = next.second_moment[i];
    m = adam.beta1 * m + (1.0 - adam.beta1) * g[i];
    v = adam.beta2 * v + (1.0 - adam.beta2) * g[i] * g[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
  return {UnflattenParams(params.config, theta), std::move(next)};
}

}  // namespace reward_forge
