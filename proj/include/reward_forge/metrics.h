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

// Reward-benchmark metrics over scored preference pairs.
//
//   overall accuracy  fraction of pairs with reward_chosen > reward_rejected
//   macro accuracy    unweighted mean of per-category accuracies
//   acc               per-pair accuracy (same quantity as overall)
//   acc+              fraction of samples (pairs grouped by sample_id) whose
//                     pairs are all correct
//
// A tie is an incorrect decision.

#ifndef REWARD_FORGE_METRICS_H_
#define REWARD_FORGE_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reward_forge/data.h"
#include "reward_forge/head.h"
#include "reward_forge/kernels.h"

namespace reward_forge {

struct ScoredPair {
  std::string record_id;
  double reward_chosen = 0.0;
  double reward_rejected = 0.0;
  std::string category;
  std::optional<std::string> sample_id;
};

struct CategoryAccuracy {
  std::size_t n = 0;
  double accuracy = 0.0;

  bool operator==(const CategoryAccuracy&) const = default;
};

struct EvalReport {
  double overall_acc = 0.0;
  double macro_acc = 0.0;
  double acc = 0.0;
  std::optional<double> acc_plus;
  std::map<std::string, CategoryAccuracy> per_category;
  std::size_t n_pairs = 0;
  std::size_t n_samples = 0;

  bool operator==(const EvalReport&) const = default;
};

bool PairCorrect(const ScoredPair& pair);
double OverallAccuracy(std::span<const ScoredPair> pairs);
double MacroAccuracy(std::span<const ScoredPair> pairs);
// Every pair must carry a sample_id.
double AccPlus(std::span<const ScoredPair> pairs);

// All metrics at once; acc_plus is omitted unless every pair has a sample_id.
EvalReport BuildReport(std::span<const ScoredPair> pairs);

std::vector<ScoredPair> ScorePairs(const HeadParams& params, const EmbeddingStore& store,
                                   std::span<const PreferenceRecord> records,
                                   bool length_normalization,
                                   ExecutionMode mode = ExecutionMode::kSerial);

EvalReport EvalModel(const HeadParams& params, std::span<const PreferenceRecord> records,
                     const EmbeddingStore& store, bool length_normalization,
                     ExecutionMode mode = ExecutionMode::kSerial);

nlohmann::json EvalReportToJson(const EvalReport& report);
// Aligned columns: one row per category, metric summary underneath.
std::string EvalReportToTable(const EvalReport& report);

}  // namespace reward_forge

#endif  // REWARD_FORGE_METRICS_H_
