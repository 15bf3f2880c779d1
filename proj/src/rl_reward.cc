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

#include "reward_forge/rl_reward.h"

#include <cmath>
#include <cwctype>
#include <locale>

#include "reward_forge/error.h"
#include "reward_forge/loss.h"
#include "reward_forge/numeric.h"

namespace reward_forge {

MatchNormalization ParseMatchNormalization(std::string_view name) {
  if (name == "exact") return MatchNormalization::kExact;
  if (name == "trim_case_fold" || name == "trimcasefold") {
    return MatchNormalization::kTrimCaseFold;
  }
  Fail(ErrorCode::kInvalidArgument,
       "match_normalization must be \"exact\" or \"trim_case_fold\"");
}

PairwiseScoreMatrix::PairwiseScoreMatrix(std::size_t n, std::vector<double> scores)
    : n_(n), scores_(std::move(scores)) {
  Require(scores_.size() == n_ * n_, ErrorCode::kShapeMismatch,
          "pairwise score matrix needs n*n entries");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (i != j) {
        Require(std::isfinite(at(i, j)), ErrorCode::kNonFinite,
                "pairwise score matrix has a non-finite off-diagonal entry");
      }
    }
  }
}

RewardScheme ParseRewardScheme(std::string_view name) {
  if (name == "rule") return RewardScheme::kRuleOnly;
  if (name == "model") return RewardScheme::kModelOnly;
  if (name == "hybrid") return RewardScheme::kHybrid;
  if (name == "pairwise") return RewardScheme::kPairwiseAggregate;
  Fail(ErrorCode::kInvalidArgument,
       "scheme must be rule, model, hybrid or pairwise; got '" + std::string(name) + "'");
}

std::string_view RewardSchemeName(RewardScheme scheme) {
  switch (scheme) {
    case RewardScheme::kRuleOnly: return "rule";
    case RewardScheme::kModelOnly: return "model";
    case RewardScheme::kHybrid: return "hybrid";
    case RewardScheme::kPairwiseAggregate: return "pairwise";
  }
  return "model";
}

namespace {

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Decodes one UTF-8 code point at text[pos]; returns false on malformed input.
bool DecodeUtf8(std::string_view text, std::size_t& pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  int extra = 0;
  if (b0 < 0x80) {
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    extra = 1;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    extra = 2;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    extra = 3;
  } else {
    return false;
  }
  if (pos + extra >= text.size() && extra > 0) return false;
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(text[pos + k]);
    if ((b & 0xC0) != 0x80) return false;
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += 1 + extra;
  return true;
}

void EncodeUtf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::ctype<wchar_t>* UnicodeCtype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    try {
      static const std::locale loc("C.UTF-8");
      return &std::use_facet<std::ctype<wchar_t>>(loc);
    } catch (const std::runtime_error&) {
      return nullptr;
    }
  }();
  return facet;
}

char32_t FoldCase(char32_t cp) {
  // Simple folds that differ from lowercasing.
  if (cp == 0x03C2) return 0x03C3;  // final sigma
  if (cp == 0x1E9E) return 0x00DF;  // capital sharp s
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (const auto* ctype = UnicodeCtype(); ctype != nullptr) {
    return static_cast<char32_t>(ctype->tolower(static_cast<wchar_t>(cp)));
  }
  return cp;
}

}  // namespace

std::string NormalizeForMatch(std::string_view text, MatchNormalization mode) {
  if (mode == MatchNormalization::kExact) return std::string(text);
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && IsSpace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && IsSpace(static_cast<unsigned char>(text[end - 1]))) --end;
  const std::string_view trimmed = text.substr(begin, end - begin);
  std::string out;
  out.reserve(trimmed.size());
  std::size_t pos = 0;
  while (pos < trimmed.size()) {
    char32_t cp = 0;
    const std::size_t at = pos;
    if (!DecodeUtf8(trimmed, pos, cp)) {
      out.push_back(trimmed[at]);  // malformed byte: keep as-is
      pos = at + 1;
      continue;
    }
    EncodeUtf8(FoldCase(cp), out);
  }
  return out;
}

double RuleReward(const RolloutResponse& response, const GroundTruth& gt) {
  Require(response.text.has_value(), ErrorCode::kSchemeRequirement,
          "rule reward needs response text (response '" + response.response_id + "')");
  return NormalizeForMatch(*response.text, gt.match_normalization) ==
                 NormalizeForMatch(gt.answer, gt.match_normalization)
             ? 1.0
             : 0.0;
}

double ModelReward(const RolloutResponse& response, const HeadParams& head,
                   bool length_normalization) {
  return ScoreResponse(head, response.embedding, response.token_length, length_normalization);
}

ResponseScorer HeadScorer(const HeadParams& head, bool length_normalization) {
  return [&head, length_normalization](const RolloutResponse& r) {
    return ModelReward(r, head, length_normalization);
  };
}

double HybridReward(const RolloutResponse& response, const std::optional<GroundTruth>& gt,
                    const ResponseScorer& scorer) {
  if (gt && RuleReward(response, *gt) == 1.0) return 1.0;
  return Sigmoid(scorer(response));
}

double HybridReward(const RolloutResponse& response, const std::optional<GroundTruth>& gt,
                    const HeadParams& head, bool length_normalization) {
  return HybridReward(response, gt, HeadScorer(head, length_normalization));
}

std::vector<double> PairwiseAggregate(const PairwiseScoreMatrix& scores) {
  Require(scores.n() >= 2, ErrorCode::kInvalidArgument,
          "pairwise aggregation needs at least 2 responses");
  std::vector<double> out(scores.n(), 0.0);
  for (std::size_t i = 0; i < scores.n(); ++i) {
    for (std::size_t j = 0; j < scores.n(); ++j) {
      if (j != i) out[i] += scores.at(i, j);
    }
  }
  return out;
}

std::vector<double> GroupRewards(const RolloutGroup& group, RewardScheme scheme,
                                 const ResponseScorer& scorer,
                                 const PairwiseScoreMatrix* pairwise) {
  Require(!group.responses.empty(), ErrorCode::kInvalidArgument,
          "rollout group '" + group.prompt_id + "' has no responses");
  std::vector<double> rewards;
  rewards.reserve(group.responses.size());
  switch (scheme) {
    case RewardScheme::kRuleOnly:
      Require(group.ground_truth.has_value(), ErrorCode::kSchemeRequirement,
              "rule scheme needs ground_truth");
      for (const RolloutResponse& r : group.responses) {
        rewards.push_back(RuleReward(r, *group.ground_truth));
      }
      break;
    case RewardScheme::kModelOnly:
      for (const RolloutResponse& r : group.responses) rewards.push_back(scorer(r));
      break;
    case RewardScheme::kHybrid:
      Require(group.ground_truth.has_value(), ErrorCode::kSchemeRequirement,
              "hybrid scheme needs ground_truth");
      for (const RolloutResponse& r : group.responses) {
        rewards.push_back(HybridReward(r, group.ground_truth, scorer));
      }
      break;
    case RewardScheme::kPairwiseAggregate:
      Require(pairwise != nullptr, ErrorCode::kSchemeRequirement,
              "pairwise scheme needs a pairwise score matrix");
      Require(pairwise->n() == group.responses.size(), ErrorCode::kSchemeRequirement,
              "pairwise score matrix size does not match the group size");
      rewards = PairwiseAggregate(*pairwise);
      break;
  }
  return rewards;
}

std::vector<double> GroupRewards(const RolloutGroup& group, RewardScheme scheme,
                                 const HeadParams& head, bool length_normalization,
                                 const PairwiseScoreMatrix* pairwise) {
  return GroupRewards(group, scheme, HeadScorer(head, length_normalization), pairwise);
}

}  // namespace reward_forge
