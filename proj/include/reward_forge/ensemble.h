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

// Reward-model ensembles with modality routing.
//
// Each response is scored by every member routed to its modality and the
// member scores are combined as a weighted sum (weights renormalized over the
// routed subset); the combined chosen/rejected scores are then compared. The
// weights are uniform (Average), proportional to validation accuracy, or
// proportional to the mean validation margin r_chosen - r_rejected (clamped
// below at 1e-6).

#ifndef REWARD_FORGE_ENSEMBLE_H_
#define REWARD_FORGE_ENSEMBLE_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reward_forge/data.h"
#include "reward_forge/head.h"
#include "reward_forge/metrics.h"

namespace reward_forge {

enum class EnsembleStrategy { kAverage, kAccuracyWeighted, kConfidenceWeighted };

std::string_view StrategyName(EnsembleStrategy strategy);
// "average" | "accuracy" | "confidence"
EnsembleStrategy ParseStrategy(std::string_view name);

inline constexpr double kConfidenceFloor = 1e-6;
inline constexpr double kWeightSumTolerance = 1e-12;

// Score transform r -> (r - mean) / stddev fitted on validation scores.
struct Standardization {
  double mean = 0.0;
  double stddev = 1.0;
};

struct EnsembleMember {
  std::string member_id;
  HeadParams params;
  std::string backbone_tag;
  std::set<Modality> modality_affinity{Modality::kText, Modality::kMultimodal};
  bool length_normalization = false;
  // The store this member's record indices point into (may be null when the
  // member only scores request embeddings).
  std::shared_ptr<const EmbeddingStore> store;
  std::optional<Standardization> standardization;
};

struct EnsembleConfig {
  EnsembleStrategy strategy = EnsembleStrategy::kAverage;
  std::optional<std::vector<double>> weights;
};

void ValidateMembers(std::span<const EnsembleMember> members);
void ValidateEnsembleConfig(const EnsembleConfig& config, std::size_t n_members);

// A member's score for one response (length normalization and
// standardization applied per the member's own settings).
double MemberScore(const EnsembleMember& member, std::span<const float> embedding,
                   std::int64_t token_length);

// Member scores for every record; indices come from record.member_indices
// when present for this member, else from chosen/rejected.
std::vector<ScoredPair> MemberScoredPairs(const EnsembleMember& member,
                                          std::span<const PreferenceRecord> records,
                                          ExecutionMode mode = ExecutionMode::kSerial);

std::vector<double> ComputeAccuracyWeights(std::span<const EnsembleMember> members,
                                           std::span<const PreferenceRecord> validation);
std::vector<double> ComputeConfidenceWeights(std::span<const EnsembleMember> members,
                                             std::span<const PreferenceRecord> validation);
// w_i = v_i / sum(v); rejects an all-zero or non-positive total.
std::vector<double> NormalizeWeights(std::span<const double> values);

// Fills config.weights for the weighted strategies when they are absent.
EnsembleConfig ResolveWeights(std::span<const EnsembleMember> members,
                              const EnsembleConfig& config,
                              std::span<const PreferenceRecord> validation);

// Returns copies of the members with standardization fitted on validation.
std::vector<EnsembleMember> FitStandardization(std::span<const EnsembleMember> members,
                                               std::span<const PreferenceRecord> validation);

// Indices of members whose affinity covers the modality; throws if none.
std::vector<std::size_t> Route(Modality modality, std::span<const EnsembleMember> members);

// Weights of the given member subset, renormalized to sum to 1.
std::vector<double> RoutedWeights(const EnsembleConfig& config, std::size_t n_members,
                                  std::span<const std::size_t> routed);

// sum_i w_i * MemberScore(member_i, embedding_i, token_length) over all
// members, one embedding per member.
double EnsembleScore(std::span<const EnsembleMember> members, const EnsembleConfig& config,
                     std::span<const std::span<const float>> embedding_per_member,
                     std::int64_t token_length);

std::vector<ScoredPair> EnsembleScoredPairs(std::span<const EnsembleMember> members,
                                            const EnsembleConfig& config,
                                            std::span<const PreferenceRecord> records,
                                            ExecutionMode mode = ExecutionMode::kSerial);

EvalReport EvalEnsemble(std::span<const EnsembleMember> members, const EnsembleConfig& config,
                        std::span<const PreferenceRecord> records,
                        ExecutionMode mode = ExecutionMode::kSerial);

// Ensemble manifest:
//   {"strategy": "average", "weights": [..] (optional), "standardize": false,
//    "members": [{"member_id", "checkpoint", "store", "modality_affinity":
//                 ["text", "multimodal"], "length_normalization" (optional,
//                 default from checkpoint), "backbone_tag"}]}
// Relative paths resolve against the manifest's directory. "store" may be
// omitted for members that only serve request embeddings.
struct EnsembleManifest {
  std::vector<EnsembleMember> members;
  EnsembleConfig config;
  bool standardize = false;
};

EnsembleManifest LoadEnsembleManifest(const std::filesystem::path& path);

}  // namespace reward_forge

#endif  // REWARD_FORGE_ENSEMBLE_H_
