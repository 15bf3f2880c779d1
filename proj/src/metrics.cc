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

#include "reward_forge/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include <fmt/format.h>

#include "reward_forge/error.h"

namespace reward_forge {

using nlohmann::json;

namespace {

void RequireNonEmpty(std::span<const ScoredPair> pairs, const char* metric) {
  Require(!pairs.empty(), ErrorCode::kInvalidArgument,
          std::string(metric) + " needs at least one pair");
}

std::size_t CountCorrect(std::span<const ScoredPair> pairs) {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), PairCorrect));
}

std::map<std::string, CategoryAccuracy> PerCategory(std::span<const ScoredPair> pairs) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // (n, correct)
  for (const ScoredPair& p : pairs) {
    auto& [n, correct] = counts[p.category];
    ++n;
    if (PairCorrect(p)) ++correct;
  }
  std::map<std::string, CategoryAccuracy> out;
  for (const auto& [category, c] : counts) {
    out[category] = CategoryAccuracy{
        c.first, static_cast<double>(c.second) / static_cast<double>(c.first)};
  }
  return out;
}

}  // namespace

bool PairCorrect(const ScoredPair& pair) {
  return pair.reward_chosen > pair.reward_rejected;
}

double OverallAccuracy(std::span<const ScoredPair> pairs) {
  RequireNonEmpty(pairs, "overall accuracy");
  return static_cast<double>(CountCorrect(pairs)) / static_cast<double>(pairs.size());
}

// The mean of per-category fractions is accumulated as an exact rational so
// that macro == overall holds bit for bit whenever the two are equal as real
// numbers (balanced categories, a single category). Falls back to a double
// sum if the common denominator would overflow.
double MacroAccuracy(std::span<const ScoredPair> pairs) {
  RequireNonEmpty(pairs, "macro accuracy");
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  for (const ScoredPair& p : pairs) {
    auto& [n, correct] = counts[p.category];
    ++n;
    if (PairCorrect(p)) ++correct;
  }
  using Wide = unsigned __int128;
  constexpr Wide kLimit = Wide{1} << 53;  // exactly representable in a double
  auto gcd = [](Wide a, Wide b) {
    while (b != 0) {
      const Wide t = a % b;
      a = b;
      b = t;
    }
    return a;
  };
  Wide num = 0;
  Wide den = 1;
  bool exact = true;
  for (const auto& [category, c] : counts) {
    const Wide n = c.first;
    const Wide g = gcd(den, n);
    const Wide new_den = den / g * n;
    if (new_den > kLimit) {
      exact = false;
      break;
    }
    num = num * (new_den / den) + Wide{c.second} * (new_den / n);
    den = new_den;
    const Wide r = gcd(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
  }
  const Wide k = counts.size();
  if (exact && den * k <= kLimit) {
    const Wide r = gcd(num, den * k);
    return static_cast<double>(static_cast<std::uint64_t>(num / r)) /
           static_cast<double>(static_cast<std::uint64_t>(den * k / r));
  }
  double sum = 0.0;
  for (const auto& [category, c] : counts) {
    sum += static_cast<double>(c.second) / static_cast<double>(c.first);
  }
  return sum / static_cast<double>(counts.size());
}

double AccPlus(std::span<const ScoredPair> pairs) {
  RequireNonEmpty(pairs, "acc+");
  std::map<std::string, bool> all_correct;
  for (const ScoredPair& p : pairs) {
    Require(p.sample_id.has_value(), ErrorCode::kInvalidArgument,
            "acc+ needs a sample_id on every pair (missing on '" + p.record_id + "')");
    auto [it, inserted] = all_correct.emplace(*p.sample_id, true);
    it->second = it->second && PairCorrect(p);
  }
  const auto fully_correct = std::count_if(
      all_correct.begin(), all_correct.end(), [](const auto& kv) { return kv.second; });
  return static_cast<double>(fully_correct) / static_cast<double>(all_correct.size());
}

EvalReport BuildReport(std::span<const ScoredPair> pairs) {
  RequireNonEmpty(pairs, "evaluation");
  for (const ScoredPair& p : pairs) {
    Require(std::isfinite(p.reward_chosen) && std::isfinite(p.reward_rejected),
            ErrorCode::kNonFinite, "non-finite reward on '" + p.record_id + "'");
  }
  EvalReport report;
  report.n_pairs = pairs.size();
  report.overall_acc = OverallAccuracy(pairs);
  report.acc = report.overall_acc;
  report.macro_acc = MacroAccuracy(pairs);
  report.per_category = PerCategory(pairs);
  const bool all_grouped = std::all_of(pairs.begin(), pairs.end(),
                                       [](const ScoredPair& p) { return p.sample_id.has_value(); });
  if (all_grouped) {
    report.acc_plus = AccPlus(pairs);
    std::set<std::string> samples;
    for (const ScoredPair& p : pairs) samples.insert(*p.sample_id);
    report.n_samples = samples.size();
  }
  return report;
}

std::vector<ScoredPair> ScorePairs(const HeadParams& params, const EmbeddingStore& store,
                                   std::span<const PreferenceRecord> records,
                                   bool length_normalization, ExecutionMode mode) {
  std::vector<ResponseSlot> slots;
  slots.reserve(2 * records.size());
  for (const PreferenceRecord& r : records) {
    slots.push_back({r.chosen.embedding_index, r.chosen.token_length});
    slots.push_back({r.rejected.embedding_index, r.rejected.token_length});
  }
  const std::vector<double> scores =
      ScoreResponses(params, store, slots, length_normalization, mode);
  std::vector<ScoredPair> pairs;
  pairs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    pairs.push_back(ScoredPair{records[i].id, scores[2 * i], scores[2 * i + 1],
                               records[i].category, records[i].sample_id});
  }
  return pairs;
}

EvalReport EvalModel(const HeadParams& params, std::span<const PreferenceRecord> records,
                     const EmbeddingStore& store, bool length_normalization,
                     ExecutionMode mode) {
  return BuildReport(ScorePairs(params, store, records, length_normalization, mode));
}

json EvalReportToJson(const EvalReport& report) {
  json per_category = json::object();
  for (const auto& [category, c] : report.per_category) {
    per_category[category] = json{{"n", c.n}, {"accuracy", c.accuracy}};
  }
  return json{{"overall_acc", report.overall_acc},
              {"macro_acc", report.macro_acc},
              {"acc", report.acc},
              {"acc_plus", report.acc_plus ? json(*report.acc_plus) : json(nullptr)},
              {"per_category", per_category},
              {"n_pairs", report.n_pairs},
              {"n_samples", report.n_samples}};
}

std::string EvalReportToTable(const EvalReport& report) {
  std::size_t width = std::string("category").size();
  for (const auto& [category, c] : report.per_category) {
    width = std::max(width, category.size());
  }
  std::string out = fmt::format("{:<{}}  {:>8}  {:>8}\n", "category", width, "n", "accuracy");
  for (const auto& [category, c] : report.per_category) {
    out += fmt::format("{:<{}}  {:>8}  {:>8.4f}\n", category, width, c.n, c.accuracy);
  }
  out += std::string(width + 20, '-') + "\n";
  out += fmt::format("{:<12} {:.4f}\n", "overall_acc", report.overall_acc);
  out += fmt::format("{:<12} {:.4f}\n", "macro_acc", report.macro_acc);
  out += fmt::format("{:<12} {:.4f}\n", "acc", report.acc);
  if (report.acc_plus) out += fmt::format("{:<12} {:.4f}\n", "acc_plus", *report.acc_plus);
  out += fmt::format("{:<12} {}\n", "n_pairs", report.n_pairs);
  out += fmt::format("{:<12} {}\n", "n_samples", report.n_samples);
  return out;
}

}  // namespace reward_forge
