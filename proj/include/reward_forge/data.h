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

// Preference data: the embedding store (one vector per query/response pair),
// the NDJSON manifest of comparisons that index into it, and the dataset
// mixing / validation-split / diagnostics operations over manifests.

#ifndef REWARD_FORGE_DATA_H_
#define REWARD_FORGE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace reward_forge {

enum class Modality { kText, kMultimodal };

std::string_view ModalityName(Modality modality);
Modality ParseModality(std::string_view name);

struct ResponseRef {
  std::size_t embedding_index = 0;
  std::int64_t token_length = 1;
  std::optional<std::string> text;

  bool operator==(const ResponseRef&) const = default;
};

// Per-member indices for ensembles whose members read different stores.
struct MemberIndices {
  std::size_t chosen = 0;
  std::size_t rejected = 0;

  bool operator==(const MemberIndices&) const = default;
};

struct PreferenceRecord {
  std::string id;
  std::string dataset_name;
  Modality modality = Modality::kText;
  std::string category;
  std::optional<std::string> sample_id;
  std::optional<std::string> query_text;
  ResponseRef chosen;
  ResponseRef rejected;
  std::map<std::string, MemberIndices> member_indices;

  bool operator==(const PreferenceRecord&) const = default;
};

// Dense count x dim matrix of 32-bit floats. Immutable once built.
//
// File layout (little-endian): "EMB1", u32 version (1), u32 dim, u32 count,
// then count*dim IEEE-754 binary32 values, row-major.
class EmbeddingStore {
 public:
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kHeaderBytes = 16;

  EmbeddingStore(std::size_t dim, std::size_t count, std::vector<float> data);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }
  std::span<const float> Row(std::size_t index) const;
  std::span<const float> data() const { return data_; }

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::size_t dim_;
  std::size_t count_;
  std::vector<float> data_;
};

void WriteEmbeddings(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore LoadEmbeddings(const std::filesystem::path& path);

// Records bound to the store their indices point into.
struct PreferenceSet {
  std::shared_ptr<const EmbeddingStore> store;
  std::vector<PreferenceRecord> records;
};

nlohmann::json RecordToJson(const PreferenceRecord& record);
// Schema check only; index validity needs a store.
PreferenceRecord RecordFromJson(const nlohmann::json& j);

// One record per non-blank line. Throws kParse / kOutOfRange /
// kInvalidArgument with the 1-based line number in the message. When store is
// non-null every embedding index is bounds-checked against it.
std::vector<PreferenceRecord> ParseManifest(std::istream& in,
                                            const EmbeddingStore* store);
std::vector<PreferenceRecord> LoadManifest(const std::filesystem::path& path,
                                           const EmbeddingStore& store);
void WriteManifest(const std::filesystem::path& path,
                   std::span<const PreferenceRecord> records);

struct MixEntry {
  std::string dataset_name;
  bool included = true;
  double weight = 1.0;
};

struct DatasetMix {
  std::vector<MixEntry> entries;
};

// Drops excluded datasets and resamples included ones with weight != 1 to
// round(weight * size) rows, with replacement. Unlisted dataset names are
// treated as excluded (and logged). Records of weight-1 datasets keep their
// input order; a resampled dataset's rows are emitted as one block at the
// position of its first record. Throws when for_training and nothing remains.
std::vector<PreferenceRecord> MixDatasets(std::span<const PreferenceRecord> records,
                                          const DatasetMix& mix, std::uint64_t seed,
                                          bool for_training = true);

struct ValidationSplit {
  std::vector<PreferenceRecord> train;
  std::vector<PreferenceRecord> validation;
};

// Seeded sample of n records without replacement, stratified by dataset_name
// with largest-remainder quotas. Both halves keep input order.
ValidationSplit SplitValidation(std::span<const PreferenceRecord> records,
                                std::size_t n, std::uint64_t seed);

// Per-dataset quotas used by SplitValidation, in order of first appearance.
std::vector<std::pair<std::string, std::size_t>> StratifiedQuotas(
    std::span<const PreferenceRecord> records, std::size_t n);

struct DatasetFinding {
  std::string kind;  // "duplicate_id", "same_index", "index_out_of_range", "bad_length"
  std::string record_id;
  std::string detail;
};

struct DatasetDiagnostics {
  std::size_t n_records = 0;
  std::map<std::string, std::size_t> per_dataset;
  std::map<std::string, std::size_t> per_modality;
  std::map<std::string, std::size_t> per_category;
  // Token-length histogram in power-of-two buckets keyed by lower bound.
  std::map<std::int64_t, std::size_t> length_histogram;
  std::vector<DatasetFinding> findings;

  bool clean() const { return findings.empty(); }
};

DatasetDiagnostics ValidateDataset(std::span<const PreferenceRecord> records,
                                   const EmbeddingStore* store);
nlohmann::json DiagnosticsToJson(const DatasetDiagnostics& diagnostics);

}  // namespace reward_forge

#endif  // REWARD_FORGE_DATA_H_
