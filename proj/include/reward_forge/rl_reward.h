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

// Reward schemes for scoring RL rollout groups.
//
//   rule      1 if the response text matches the ground truth, else 0
//   model     the reward head's score
//   hybrid    1 on a rule match, otherwise sigmoid(model score)
//   pairwise  R(y_i) = sum_{j != i} S(y_i, y_j) for a caller-supplied judge
//             matrix S
//
// Group-relative advantage normalization is left to the RL trainer.

#ifndef REWARD_FORGE_RL_REWARD_H_
#define REWARD_FORGE_RL_REWARD_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reward_forge/head.h"

namespace reward_forge {

enum class MatchNormalization { kExact, kTrimCaseFold };

MatchNormalization ParseMatchNormalization(std::string_view name);

struct GroundTruth {
  std::string answer;
  MatchNormalization match_normalization = MatchNormalization::kTrimCaseFold;
};

struct RolloutResponse {
  std::string response_id;
  std::optional<std::string> text;
  std::vector<float> embedding;
  std::int64_t token_length = 1;
};

struct RolloutGroup {
  std::string prompt_id;
  std::vector<RolloutResponse> responses;
  std::optional<GroundTruth> ground_truth;
};

// n x n judge scores S(y_i, y_j), row-major. The diagonal is never read.
class PairwiseScoreMatrix {
 public:
  PairwiseScoreMatrix(std::size_t n, std::vector<double> scores);

  std::size_t n() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return scores_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> scores_;
};

enum class RewardScheme { kRuleOnly, kModelOnly, kHybrid, kPairwiseAggregate };

// "rule" | "model" | "hybrid" | "pairwise"
RewardScheme ParseRewardScheme(std::string_view name);
std::string_view RewardSchemeName(RewardScheme scheme);

// Exact: unchanged. TrimCaseFold: outer whitespace trimmed, then simple
// per-code-point case folding of UTF-8 text.
std::string NormalizeForMatch(std::string_view text, MatchNormalization mode);

double RuleReward(const RolloutResponse& response, const GroundTruth& gt);

double ModelReward(const RolloutResponse& response, const HeadParams& head,
                   bool length_normalization);

// Maps a response to its model score; lets an ensemble stand in for a head.
using ResponseScorer = std::function<double(const RolloutResponse&)>;

ResponseScorer HeadScorer(const HeadParams& head, bool length_normalization);

// Without ground truth this is sigmoid(model score).
double HybridReward(const RolloutResponse& response, const std::optional<GroundTruth>& gt,
                    const ResponseScorer& scorer);
double HybridReward(const RolloutResponse& response, const std::optional<GroundTruth>& gt,
                    const HeadParams& head, bool length_normalization);

std::vector<double> PairwiseAggregate(const PairwiseScoreMatrix& scores);

std::vector<double> GroupRewards(const RolloutGroup& group, RewardScheme scheme,
                                 const ResponseScorer& scorer,
                                 const PairwiseScoreMatrix* pairwise);
std::vector<double> GroupRewards(const RolloutGroup& group, RewardScheme scheme,
                                 const HeadParams& head, bool length_normalization,
                                 const PairwiseScoreMatrix* pairwise);

}  // namespace reward_forge

#endif  // REWARD_FORGE_RL_REWARD_H_
