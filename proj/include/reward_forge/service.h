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

// Newline-delimited JSON scoring service over TCP.
//
// Each request line is one JSON object; each gets exactly one response line
// that echoes "request_id" and carries either "rewards" or "error".
//
//   {"op": "info", "request_id": ..}
//   {"op": "score", "request_id": .., "embedding": [..] | "embeddings": [[..], ..],
//    "token_length": n | "token_lengths": [..], "modality": "text",
//    "member_embeddings": {"<member_id>": [[..], ..]}}
//   {"op": "score_group", "request_id": .., "scheme": "rule|model|hybrid|pairwise",
//    "embeddings": [[..], ..], "token_lengths": [..], "texts": [..],
//    "ground_truth": {"answer": "..", "match_normalization": "trim_case_fold"},
//    "pairwise_scores": [[..], ..], "modality": "text"}
//
// Error codes: BAD_REQUEST, DIM_MISMATCH, SCHEME_REQUIREMENT, OVERSIZE, BUSY,
// INTERNAL.

#ifndef REWARD_FORGE_SERVICE_H_
#define REWARD_FORGE_SERVICE_H_

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "reward_forge/ensemble.h"

namespace reward_forge {

inline constexpr int kProtocolVersion = 1;

struct ServeConfig {
  std::string bind_address = "127.0.0.1:8765";
  std::vector<std::string> checkpoint_paths;
  std::optional<std::string> ensemble_manifest;
  std::size_t max_concurrent_connections = 64;
  std::size_t request_size_limit = 1 << 20;
};

// Read-only after construction.
struct ServedModels {
  std::vector<EnsembleMember> members;
  EnsembleConfig config;
};

ServedModels LoadServedModels(const ServeConfig& config);
// A single head served alone.
ServedModels SingleHeadModels(const HeadParams& params, bool length_normalization,
                              std::string member_id = "head");

nlohmann::json HandleRequest(const nlohmann::json& request, const ServedModels& models);
// Parses one request line and returns the response line (no newline).
std::string HandleLine(std::string_view line, const ServedModels& models,
                       std::size_t request_size_limit);

nlohmann::json ErrorResponse(const nlohmann::json& request_id, std::string_view code,
                             std::string_view message);

class ScoringServer {
 public:
  ScoringServer(std::shared_ptr<const ServedModels> models, ServeConfig config);
  ~ScoringServer();

  ScoringServer(const ScoringServer&) = delete;
  ScoringServer& operator=(const ScoringServer&) = delete;

  // Binds and starts the accept loop. Port 0 picks an ephemeral port.
  void Start();
  std::uint16_t port() const { return port_; }
  // Stops accepting, lets in-flight requests finish, joins all threads.
  void Stop();

 private:
  struct Connection {
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void AcceptLoop();
  void Serve(int fd, Connection* connection);
  void ReapFinished();

  std::shared_ptr<const ServedModels> models_;
  ServeConfig config_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> active_{0};
  std::thread accept_thread_;
  std::mutex connections_mu_;
  std::list<Connection> connections_;
};

}  // namespace reward_forge

#endif  // REWARD_FORGE_SERVICE_H_
