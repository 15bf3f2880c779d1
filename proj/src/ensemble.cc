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

#include "reward_forge/ensemble.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "reward_forge/checkpoint.h"
#include "reward_forge/error.h"
#include "reward_forge/kernels.h"
#include "reward_forge/loss.h"

namespace reward_forge {

using nlohmann::json;

std::string_view StrategyName(EnsembleStrategy strategy) {
  switch (strategy) {
    case EnsembleStrategy::kAverage: return "average";
    case EnsembleStrategy::kAccuracyWeighted: return "accuracy";
    case EnsembleStrategy::kConfidenceWeighted: return "confidence";
  }
  return "average";
}

EnsembleStrategy ParseStrategy(std::string_view name) {
  if (name == "average" || name == "avg") return EnsembleStrategy::kAverage;
  if (name == "accuracy") return EnsembleStrategy::kAccuracyWeighted;
  if (name == "confidence") return EnsembleStrategy::kConfidenceWeighted;
  Fail(ErrorCode::kInvalidArgument,
       "strategy must be average, accuracy or confidence; got '" + std::string(name) + "'");
}

void ValidateMembers(std::span<const EnsembleMember> members) {
  Require(!members.empty(), ErrorCode::kInvalidArgument, "ensemble has no members");
  std::unordered_set<std::string> ids;
  for (const EnsembleMember& m : members) {
    Require(!m.modality_affinity.empty(), ErrorCode::kInvalidArgument,
            "member '" + m.member_id + "' has an empty modality affinity");
    Require(ids.insert(m.member_id).second, ErrorCode::kInvalidArgument,
            "duplicate member_id '" + m.member_id + "'");
    ValidateHeadParams(m.params);
  }
}

void ValidateEnsembleConfig(const EnsembleConfig& config, std::size_t n_members) {
  if (!config.weights) return;
  const std::vector<double>& w = *config.weights;
  Require(w.size() == n_members, ErrorCode::kInvalidArgument,
          fmt::format("ensemble has {} weights for {} members", w.size(), n_members));
  double sum = 0.0;
  for (double v : w) {
    Require(v > 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument,
            "ensemble weights must be positive");
    sum += v;
  }
  Require(std::fabs(sum - 1.0) <= kWeightSumTolerance, ErrorCode::kInvalidArgument,
          fmt::format("ensemble weights sum to {}, expected 1", sum));
}

double MemberScore(const EnsembleMember& member, std::span<const float> embedding,
                   std::int64_t token_length) {
  double r = ScoreResponse(member.params, embedding, token_length,
                           member.length_normalization);
  if (member.standardization) {
    r = (r - member.standardization->mean) / member.standardization->stddev;
  }
  return r;
}

namespace {

MemberIndices IndicesFor(const EnsembleMember& member, const PreferenceRecord& record) {
  if (auto it = record.member_indices.find(member.member_id);
      it != record.member_indices.end()) {
    return it->second;
  }
  return MemberIndices{record.chosen.embedding_index, record.rejected.embedding_index};
}

const EmbeddingStore& StoreOf(const EnsembleMember& member) {
  Require(member.store != nullptr, ErrorCode::kInvalidArgument,
          "member '" + member.member_id + "' has no embedding store bound");
  return *member.store;
}

}  // namespace

std::vector<ScoredPair> MemberScoredPairs(const EnsembleMember& member,
                                          std::span<const PreferenceRecord> records,
                                          ExecutionMode mode) {
  std::vector<ResponseSlot> slots;
  slots.reserve(2 * records.size());
  for (const PreferenceRecord& r : records) {
    const MemberIndices idx = IndicesFor(member, r);
    slots.push_back({idx.chosen, r.chosen.token_length});
    slots.push_back({idx.rejected, r.rejected.token_length});
  }
  std::vector<double> scores = ScoreResponses(member.params, StoreOf(member), slots,
                                              member.length_normalization, mode);
  if (member.standardization) {
    for (double& s : scores) {
      s = (s - member.standardization->mean) / member.standardization->stddev;
    }
  }
  std::vector<ScoredPair> pairs;
  pairs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    pairs.push_back(ScoredPair{records[i].id, scores[2 * i], scores[2 * i + 1],
                               records[i].category, records[i].sample_id});
  }
  return pairs;
}

std::vector<double> NormalizeWeights(std::span<const double> values) {
  Require(!values.empty(), ErrorCode::kInvalidArgument, "no weights to normalize");
  double sum = 0.0;
  for (double v : values) {
    Require(v >= 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument,
            "raw weights must be finite and non-negative");
    sum += v;
  }
  Require(sum > 0.0, ErrorCode::kDegenerateWeights,
          "every member has zero weight (all validation accuracies are 0)");
  std::vector<double> w(values.begin(), values.end());
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> ComputeAccuracyWeights(std::span<const EnsembleMember> members,
                                           std::span<const PreferenceRecord> validation) {
  ValidateMembers(members);
  Require(!validation.empty(), ErrorCode::kInvalidArgument, "validation set is empty");
  std::vector<double> accuracy;
  for (const EnsembleMember& m : members) {
    accuracy.push_back(OverallAccuracy(MemberScoredPairs(m, validation)));
  }
  return NormalizeWeights(accuracy);
}

std::vector<double> ComputeConfidenceWeights(std::span<const EnsembleMember> members,
                                             std::span<const PreferenceRecord> validation) {
  ValidateMembers(members);
  Require(!validation.empty(), ErrorCode::kInvalidArgument, "validation set is empty");
  std::vector<double> margins;
  for (const EnsembleMember& m : members) {
    double sum = 0.0;
    const auto pairs = MemberScoredPairs(m, validation);
    for (const ScoredPair& p : pairs) sum += p.reward_chosen - p.reward_rejected;
    margins.push_back(std::max(sum / static_cast<double>(pairs.size()), kConfidenceFloor));
  }
  return NormalizeWeights(margins);
}

EnsembleConfig ResolveWeights(std::span<const EnsembleMember> members,
                              const EnsembleConfig& config,
                              std::span<const PreferenceRecord> validation) {
  EnsembleConfig out = config;
  if (out.weights) {
    ValidateEnsembleConfig(out, members.size());
    return out;
  }
  switch (config.strategy) {
    case EnsembleStrategy::kAverage:
      break;
    case EnsembleStrategy::kAccuracyWeighted:
      out.weights = ComputeAccuracyWeights(members, validation);
      break;
    case EnsembleStrategy::kConfidenceWeighted:
      out.weights = ComputeConfidenceWeights(members, validation);
      break;
  }
  return out;
}

std::vector<EnsembleMember> FitStandardization(std::span<const EnsembleMember> members,
                                               std::span<const PreferenceRecord> validation) {
  Require(!validation.empty(), ErrorCode::kInvalidArgument, "validation set is empty");
  std::vector<EnsembleMember> out(members.begin(), members.end());
  for (EnsembleMember& m : out) {
    m.standardization.reset();
    const auto pairs = MemberScoredPairs(m, validation);
    double sum = 0.0;
    for (const ScoredPair& p : pairs) sum += p.reward_chosen + p.reward_rejected;
    const double n = 2.0 * static_cast<double>(pairs.size());
    const double mean = sum / n;
    double sq = 0.0;
    for (const ScoredPair& p : pairs) {
      sq += (p.reward_chosen - mean) * (p.reward_chosen - mean) +
            (p.reward_rejected - mean) * (p.reward_rejected - mean);
    }
    const double stddev = std::sqrt(sq / n);
    m.standardization = Standardization{mean, stddev > 0.0 ? stddev : 1.0};
  }
  return out;
}

std::vector<std::size_t> Route(Modality modality, std::span<const EnsembleMember> members) {
  Require(!members.empty(), ErrorCode::kInvalidArgument, "ensemble has no members");
  std::vector<std::size_t> routed;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].modality_affinity.contains(modality)) routed.push_back(i);
  }
  Require(!routed.empty(), ErrorCode::kInvalidArgument,
          "no ensemble member covers modality '" + std::string(ModalityName(modality)) + "'");
  return routed;
}

std::vector<double> RoutedWeights(const EnsembleConfig& config, std::size_t n_members,
                                  std::span<const std::size_t> routed) {
  ValidateEnsembleConfig(config, n_members);
  if (!config.weights || routed.size() == n_members) {
    if (!config.weights) {
      return std::vector<double>(routed.size(), 1.0 / static_cast<double>(routed.size()));
    }
    return *config.weights;
  }
  std::vector<double> subset;
  for (std::size_t i : routed) subset.push_back((*config.weights)[i]);
  return NormalizeWeights(subset);
}

double EnsembleScore(std::span<const EnsembleMember> members, const EnsembleConfig& config,
                     std::span<const std::span<const float>> embedding_per_member,
                     std::int64_t token_length) {
  Require(embedding_per_member.size() == members.size(), ErrorCode::kInvalidArgument,
          fmt::format("{} embeddings supplied for {} members", embedding_per_member.size(),
                      members.size()));
  std::vector<std::size_t> all(members.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<double> w = RoutedWeights(config, members.size(), all);
  double score = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    score += w[i] * MemberScore(members[i], embedding_per_member[i], token_length);
  }
  return score;
}

std::vector<ScoredPair> EnsembleScoredPairs(std::span<const EnsembleMember> members,
                                            const EnsembleConfig& config,
                                            std::span<const PreferenceRecord> records,
                                            ExecutionMode mode) {
  ValidateMembers(members);
  ValidateEnsembleConfig(config, members.size());
  // Per member: the records routed to it, scored in one batch.
  std::vector<std::vector<std::size_t>> routed(records.size());
  std::vector<std::vector<std::size_t>> member_records(members.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    routed[r] = Route(records[r].modality, members);
    for (std::size_t m : routed[r]) member_records[m].push_back(r);
  }
  // member_scores[m][r] is valid only when member m is routed for record r.
  std::vector<std::vector<ScoredPair>> member_scores(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    std::vector<PreferenceRecord> subset;
    subset.reserve(member_records[m].size());
    for (std::size_t r : member_records[m]) subset.push_back(records[r]);
    const auto pairs = MemberScoredPairs(members[m], subset, mode);
    member_scores[m].resize(records.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      member_scores[m][member_records[m][k]] = pairs[k];
    }
  }
  std::vector<ScoredPair> out;
  out.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::vector<double> w = RoutedWeights(config, members.size(), routed[r]);
    double chosen = 0.0;
    double rejected = 0.0;
    for (std::size_t k = 0; k < routed[r].size(); ++k) {
      const ScoredPair& p = member_scores[routed[r][k]][r];
      chosen += w[k] * p.reward_chosen;
      rejected += w[k] * p.reward_rejected;
    }
    out.push_back(ScoredPair{records[r].id, chosen, rejected, records[r].category,
                             records[r].sample_id});
  }
  return out;
}

EvalReport EvalEnsemble(std::span<const EnsembleMember> members, const EnsembleConfig& config,
                        std::span<const PreferenceRecord> records, ExecutionMode mode) {
  return BuildReport(EnsembleScoredPairs(members, config, records, mode));
}

namespace {

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

EnsembleManifest LoadEnsembleManifest(const std::filesystem::path& path) {
  const json j = ReadJsonFile(path);
  const std::filesystem::path base = path.parent_path();
  EnsembleManifest manifest;
  try {
    manifest.config.strategy = ParseStrategy(j.value("strategy", std::string("average")));
    if (auto it = j.find("weights"); it != j.end() && !it->is_null()) {
      manifest.config.weights = it->get<std::vector<double>>();
    }
    manifest.standardize = j.value("standardize", false);
    for (const json& mj : j.at("members")) {
      EnsembleMember member;
      member.member_id = mj.at("member_id").get<std::string>();
      const Checkpoint ckpt =
          LoadCheckpoint(Resolve(base, mj.at("checkpoint").get<std::string>()));
      member.params = ckpt.params;
      member.length_normalization =
          mj.value("length_normalization", ckpt.length_normalization);
      member.backbone_tag = mj.value("backbone_tag", std::string());
      if (auto it = mj.find("modality_affinity"); it != mj.end()) {
        member.modality_affinity.clear();
        for (const json& m : *it) member.modality_affinity.insert(ParseModality(m.get<std::string>()));
      }
      if (auto it = mj.find("store"); it != mj.end() && !it->is_null()) {
        member.store = std::make_shared<const EmbeddingStore>(
            LoadEmbeddings(Resolve(base, it->get<std::string>())));
        Require(member.store->dim() == member.params.config.input_dim,
                ErrorCode::kDimMismatch,
                fmt::format("member '{}': store dim {} != head input_dim {}",
                            member.member_id, member.store->dim(),
                            member.params.config.input_dim));
      }
      manifest.members.push_back(std::move(member));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  ValidateMembers(manifest.members);
  ValidateEnsembleConfig(manifest.config, manifest.members.size());
  return manifest;
}

}  // namespace reward_forge
