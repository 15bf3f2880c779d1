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

#include "reward_forge/checkpoint.h"

#include <fstream>
#include <sstream>

#include "reward_forge/error.h"

namespace reward_forge {

using nlohmann::json;

json HeadConfigToJson(const HeadConfig& config) {
  return json{{"input_dim", config.input_dim},
              {"layer_count", config.layer_count},
              {"hidden_dim", config.EffectiveHiddenDim()},
              {"activation", std::string(ActivationName(config.activation))},
              {"seed", config.seed}};
}

HeadConfig HeadConfigFromJson(const json& j) {
  try {
    HeadConfig config;
    config.input_dim = j.at("input_dim").get<std::size_t>();
    config.layer_count = j.value("layer_count", 2);
    config.hidden_dim = j.value("hidden_dim", std::size_t{0});
    config.activation = ParseActivation(j.value("activation", std::string("silu")));
    config.seed = j.value("seed", std::uint64_t{0});
    ValidateHeadConfig(config);
    return config;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("head config: ") + e.what());
  }
}

json CheckpointToJson(const Checkpoint& checkpoint) {
  json layers = json::array();
  for (const DenseLayer& layer : checkpoint.params.layers) {
    layers.push_back(json{{"rows", layer.rows},
                          {"cols", layer.cols},
                          {"weights", layer.weights},
                          {"bias", layer.bias}});
  }
  return json{{"format_version", kCheckpointFormatVersion},
              {"config", HeadConfigToJson(checkpoint.params.config)},
              {"length_normalization", checkpoint.length_normalization},
              {"layers", std::move(layers)}};
}

Checkpoint CheckpointFromJson(const json& j) {
  Checkpoint checkpoint;
  try {
    const int version = j.at("format_version").get<int>();
    Require(version == kCheckpointFormatVersion, ErrorCode::kVersionMismatch,
            "checkpoint format_version " + std::to_string(version) +
                " is not supported (expected " +
                std::to_string(kCheckpointFormatVersion) + ")");
    checkpoint.params.config = HeadConfigFromJson(j.at("config"));
    checkpoint.length_normalization = j.value("length_normalization", false);
    for (const json& lj : j.at("layers")) {
      DenseLayer layer;
      layer.rows = lj.at("rows").get<std::size_t>();
      layer.cols = lj.at("cols").get<std::size_t>();
      layer.weights = lj.at("weights").get<std::vector<double>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      checkpoint.params.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("checkpoint: ") + e.what());
  }
  ValidateHeadParams(checkpoint.params);
  return checkpoint;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  WriteTextFile(path, CheckpointToJson(checkpoint).dump() + "\n");
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return CheckpointFromJson(ReadJsonFile(path));
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot open " + path.string() + " for writing");
  out << text;
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace reward_forge
