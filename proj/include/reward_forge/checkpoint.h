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

// Head checkpoints are a single JSON document:
//
//   {"format_version": 1,
//    "config": {"input_dim", "layer_count", "hidden_dim", "activation", "seed"},
//    "length_normalization": false,          (optional, defaults to false)
//    "layers": [{"rows", "cols", "weights": [...], "bias": [...]}, ...]}
//
// Doubles are written as shortest round-trip decimals, so a save/load cycle
// reproduces every parameter bit for bit.

#ifndef REWARD_FORGE_CHECKPOINT_H_
#define REWARD_FORGE_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "reward_forge/head.h"

namespace reward_forge {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  HeadParams params;
  // Whether the head was trained (and must be scored) on length-normalized
  // rewards.
  bool length_normalization = false;

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json HeadConfigToJson(const HeadConfig& config);
HeadConfig HeadConfigFromJson(const nlohmann::json& j);

nlohmann::json CheckpointToJson(const Checkpoint& checkpoint);
Checkpoint CheckpointFromJson(const nlohmann::json& j);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Shared by every JSON reader in the library.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace reward_forge

#endif  // REWARD_FORGE_CHECKPOINT_H_
