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

#include "reward_forge/data.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "reward_forge/error.h"

namespace reward_forge {

using nlohmann::json;

std::string_view ModalityName(Modality modality) {
  return modality == Modality::kText ? "text" : "multimodal";
}

Modality ParseModality(std::string_view name) {
  if (name == "text") return Modality::kText;
  if (name == "multimodal") return Modality::kMultimodal;
  Fail(ErrorCode::kInvalidArgument,
       "modality must be \"text\" or \"multimodal\", got \"" + std::string(name) +
           "\"");
}

// ---------------------------------------------------------------------------
// Embedding store

EmbeddingStore::EmbeddingStore(std::size_t dim, std::size_t count,
                               std::vector<float> data)
    : dim_(dim), count_(count), data_(std::move(data)) {
  Require(dim_ > 0, ErrorCode::kInvalidArgument, "embedding dim must be positive");
  Require(data_.size() == dim_ * count_, ErrorCode::kSizeMismatch,
          "embedding data has " + std::to_string(data_.size()) +
              " values, expected " + std::to_string(dim_ * count_));
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      Fail(ErrorCode::kNonFinite, "embedding row " + std::to_string(i / dim_) +
                                      " has a non-finite value");
    }
  }
}

std::span<const float> EmbeddingStore::Row(std::size_t index) const {
  Require(index < count_, ErrorCode::kOutOfRange,
          "embedding index " + std::to_string(index) + " out of range (count " +
              std::to_string(count_) + ")");
  return std::span<const float>(data_).subspan(index * dim_, dim_);
}

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void WriteEmbeddings(const std::filesystem::path& path, const EmbeddingStore& store) {
  Require(store.dim() <= UINT32_MAX && store.count() <= UINT32_MAX,
          ErrorCode::kInvalidArgument, "embedding store too large for u32 header");
  std::string bytes(kMagic, 4);
  PutU32(bytes, EmbeddingStore::kVersion);
  PutU32(bytes, static_cast<std::uint32_t>(store.dim()));
  PutU32(bytes, static_cast<std::uint32_t>(store.count()));
  bytes.reserve(EmbeddingStore::kHeaderBytes + store.data().size() * 4);
  for (float f : store.data()) PutU32(bytes, std::bit_cast<std::uint32_t>(f));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

EmbeddingStore LoadEmbeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  Require(bytes.size() >= EmbeddingStore::kHeaderBytes, ErrorCode::kSizeMismatch,
          where + "file shorter than the 16-byte header");
  Require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::kBadMagic,
          where + "bad magic (expected EMB1)");
  const std::uint32_t version = GetU32(bytes.data() + 4);
  Require(version == EmbeddingStore::kVersion, ErrorCode::kVersionMismatch,
          where + "unsupported version " + std::to_string(version));
  const std::uint32_t dim = GetU32(bytes.data() + 8);
  const std::uint32_t count = GetU32(bytes.data() + 12);
  Require(dim > 0, ErrorCode::kInvalidArgument, where + "header declares dim 0");
  const std::uint64_t expected =
      EmbeddingStore::kHeaderBytes + std::uint64_t{dim} * count * 4;
  Require(bytes.size() == expected, ErrorCode::kSizeMismatch,
          where + "file is " + std::to_string(bytes.size()) +
              " bytes, header implies " + std::to_string(expected));
  std::vector<float> data(std::size_t{dim} * count);
  const unsigned char* p = bytes.data() + EmbeddingStore::kHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4) {
    data[i] = std::bit_cast<float>(GetU32(p));
  }
  return EmbeddingStore(dim, count, std::move(data));
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json ResponseToJson(const ResponseRef& r) {
  json j{{"embedding_index", r.embedding_index}, {"token_length", r.token_length}};
  j["text"] = r.text ? json(*r.text) : json(nullptr);
  return j;
}

std::optional<std::string> OptionalString(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

ResponseRef ResponseFromJson(const json& j, const char* which) {
  ResponseRef r;
  const json& idx = j.at("embedding_index");
  Require(idx.is_number_integer() && idx.get<std::int64_t>() >= 0,
          ErrorCode::kInvalidArgument,
          std::string(which) + ".embedding_index must be a non-negative integer");
  r.embedding_index = idx.get<std::size_t>();
  r.token_length = j.at("token_length").get<std::int64_t>();
  Require(r.token_length >= 1, ErrorCode::kInvalidArgument,
          std::string(which) + ".token_length must be >= 1, got " +
              std::to_string(r.token_length));
  r.text = OptionalString(j, "text");
  return r;
}

}  // namespace

json RecordToJson(const PreferenceRecord& record) {
  json j{{"id", record.id},
         {"dataset_name", record.dataset_name},
         {"modality", std::string(ModalityName(record.modality))},
         {"category", record.category}};
  j["sample_id"] = record.sample_id ? json(*record.sample_id) : json(nullptr);
  j["query_text"] = record.query_text ? json(*record.query_text) : json(nullptr);
  j["chosen"] = ResponseToJson(record.chosen);
  j["rejected"] = ResponseToJson(record.rejected);
  if (!record.member_indices.empty()) {
    json members = json::object();
    for (const auto& [member, idx] : record.member_indices) {
      members[member] = json{{"chosen", idx.chosen}, {"rejected", idx.rejected}};
    }
    j["member_indices"] = std::move(members);
  }
  return j;
}

PreferenceRecord RecordFromJson(const json& j) {
  try {
    Require(j.is_object(), ErrorCode::kParse, "record must be a JSON object");
    PreferenceRecord r;
    r.id = j.at("id").get<std::string>();
    r.dataset_name = j.at("dataset_name").get<std::string>();
    r.modality = ParseModality(j.at("modality").get<std::string>());
    r.category = j.at("category").get<std::string>();
    r.sample_id = OptionalString(j, "sample_id");
    r.query_text = OptionalString(j, "query_text");
    r.chosen = ResponseFromJson(j.at("chosen"), "chosen");
    r.rejected = ResponseFromJson(j.at("rejected"), "rejected");
    if (auto it = j.find("member_indices"); it != j.end() && !it->is_null()) {
      for (const auto& [member, idx] : it->items()) {
        r.member_indices[member] = MemberIndices{idx.at("chosen").get<std::size_t>(),
                                                 idx.at("rejected").get<std::size_t>()};
      }
    }
    return r;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, e.what());
  }
}

std::vector<PreferenceRecord> ParseManifest(std::istream& in,
                                            const EmbeddingStore* store) {
  std::vector<PreferenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    PreferenceRecord record;
    try {
      record = RecordFromJson(json::parse(line));
    } catch (const json::exception& e) {
      Fail(ErrorCode::kParse, where + e.what());
    } catch (const Error& e) {
      Fail(e.code(), where + e.what());
    }
    if (store != nullptr) {
      for (const auto* ref : {&record.chosen, &record.rejected}) {
        Require(ref->embedding_index < store->count(), ErrorCode::kOutOfRange,
                where + "embedding_index " + std::to_string(ref->embedding_index) +
                    " out of range for store of " + std::to_string(store->count()) +
                    " vectors");
      }
    }
    Require(record.chosen.embedding_index != record.rejected.embedding_index,
            ErrorCode::kInvalidArgument,
            where + "chosen and rejected share embedding_index " +
                std::to_string(record.chosen.embedding_index));
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<PreferenceRecord> LoadManifest(const std::filesystem::path& path,
                                           const EmbeddingStore& store) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  return ParseManifest(in, &store);
}

void WriteManifest(const std::filesystem::path& path,
                   std::span<const PreferenceRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot open " + path.string() + " for writing");
  for (const PreferenceRecord& r : records) out << RecordToJson(r).dump() << '\n';
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Mixing and splitting

std::vector<PreferenceRecord> MixDatasets(std::span<const PreferenceRecord> records,
                                          const DatasetMix& mix, std::uint64_t seed,
                                          bool for_training) {
  std::unordered_map<std::string, const MixEntry*> by_name;
  for (const MixEntry& entry : mix.entries) {
    Require(entry.weight > 0.0 && std::isfinite(entry.weight),
            ErrorCode::kInvalidArgument,
            "mix weight for " + entry.dataset_name + " must be positive");
    by_name[entry.dataset_name] = &entry;
  }

  std::unordered_map<std::string, std::vector<std::size_t>> members;
  std::set<std::string> warned;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string& name = records[i].dataset_name;
    members[name].push_back(i);
    if (!by_name.contains(name) && warned.insert(name).second) {
      spdlog::warn("dataset '{}' is not listed in the mix; excluding it", name);
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<PreferenceRecord> out;
  std::unordered_set<std::string> emitted;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string& name = records[i].dataset_name;
    auto it = by_name.find(name);
    if (it == by_name.end() || !it->second->included) continue;
    const double weight = it->second->weight;
    if (weight == 1.0) {
      out.push_back(records[i]);
      continue;
    }
    if (!emitted.insert(name).second) continue;
    const std::vector<std::size_t>& rows = members[name];
    const auto target = static_cast<std::size_t>(
        std::llround(weight * static_cast<double>(rows.size())));
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t k = 0; k < target; ++k) out.push_back(records[rows[pick(rng)]]);
  }
  if (for_training) {
    Require(!out.empty(), ErrorCode::kInvalidArgument,
            "dataset mix leaves no training records");
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> StratifiedQuotas(
    std::span<const PreferenceRecord> records, std::size_t n) {
  std::vector<std::pair<std::string, std::size_t>> sizes;
  std::unordered_map<std::string, std::size_t> slot;
  for (const PreferenceRecord& r : records) {
    auto [it, inserted] = slot.emplace(r.dataset_name, sizes.size());
    if (inserted) sizes.emplace_back(r.dataset_name, 0);
    ++sizes[it->second].second;
  }
  const std::size_t total = records.size();
  std::vector<std::pair<std::string, std::size_t>> quotas;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (numerator, slot)
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    // Exact integer arithmetic: quota = floor(n*size/total), remainder kept
    // as the numerator n*size mod total.
    const std::size_t prod = n * sizes[k].second;
    quotas.emplace_back(sizes[k].first, prod / total);
    remainders.emplace_back(prod % total, k);
    assigned += prod / total;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
    ++quotas[remainders[k].second].second;
  }
  return quotas;
}

ValidationSplit SplitValidation(std::span<const PreferenceRecord> records,
                                std::size_t n, std::uint64_t seed) {
  Require(n > 0, ErrorCode::kInvalidArgument, "validation size must be positive");
  Require(n <= records.size(), ErrorCode::kInvalidArgument,
          "validation size " + std::to_string(n) + " exceeds record count " +
              std::to_string(records.size()));
  const auto quotas = StratifiedQuotas(records, n);
  std::unordered_map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    rows[records[i].dataset_name].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> in_validation(records.size(), false);
  for (const auto& [name, quota] : quotas) {
    std::vector<std::size_t>& candidates = rows[name];
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t k = 0; k < quota; ++k) in_validation[candidates[k]] = true;
  }
  ValidationSplit split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_validation[i] ? split.validation : split.train).push_back(records[i]);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Diagnostics

DatasetDiagnostics ValidateDataset(std::span<const PreferenceRecord> records,
                                   const EmbeddingStore* store) {
  DatasetDiagnostics d;
  d.n_records = records.size();
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> reported;
  for (const PreferenceRecord& r : records) {
    ++d.per_dataset[r.dataset_name];
    ++d.per_modality[std::string(ModalityName(r.modality))];
    ++d.per_category[r.category];
    if (!seen.insert(r.id).second && reported.insert(r.id).second) {
      d.findings.push_back({"duplicate_id", r.id, "id appears more than once"});
    }
    if (r.chosen.embedding_index == r.rejected.embedding_index) {
      d.findings.push_back({"same_index", r.id,
                            "chosen and rejected share embedding_index " +
                                std::to_string(r.chosen.embedding_index)});
    }
    for (const auto* ref : {&r.chosen, &r.rejected}) {
      if (store != nullptr && ref->embedding_index >= store->count()) {
        d.findings.push_back({"index_out_of_range", r.id,
                              "embedding_index " + std::to_string(ref->embedding_index) +
                                  " >= store count " + std::to_string(store->count())});
      }
      if (ref->token_length < 1) {
        d.findings.push_back({"bad_length", r.id,
                              "token_length " + std::to_string(ref->token_length)});
        continue;
      }
      std::int64_t bucket = 1;
      while (bucket * 2 <= ref->token_length) bucket *= 2;
      ++d.length_histogram[bucket];
    }
  }
  return d;
}

json DiagnosticsToJson(const DatasetDiagnostics& d) {
  json findings = json::array();
  for (const DatasetFinding& f : d.findings) {
    findings.push_back({{"kind", f.kind}, {"record_id", f.record_id}, {"detail", f.detail}});
  }
  json histogram = json::object();
  for (const auto& [bucket, n] : d.length_histogram) histogram[std::to_string(bucket)] = n;
  return json{{"n_records", d.n_records},   {"per_dataset", d.per_dataset},
              {"per_modality", d.per_modality}, {"per_category", d.per_category},
              {"length_histogram", histogram}, {"findings", findings},
              {"clean", d.clean()}};
}

}  // namespace reward_forge
