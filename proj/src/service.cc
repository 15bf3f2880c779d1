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

#include "reward_forge/service.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "reward_forge/checkpoint.h"
#include "reward_forge/error.h"
#include "reward_forge/numeric.h"
#include "reward_forge/rl_reward.h"

namespace reward_forge {

using nlohmann::json;

ServedModels LoadServedModels(const ServeConfig& config) {
  ServedModels models;
  if (config.ensemble_manifest) {
    EnsembleManifest manifest = LoadEnsembleManifest(*config.ensemble_manifest);
    Require(manifest.config.strategy == EnsembleStrategy::kAverage ||
                manifest.config.weights.has_value(),
            ErrorCode::kInvalidArgument,
            "serving a weighted ensemble needs fixed weights in the manifest");
    Require(!manifest.standardize, ErrorCode::kInvalidArgument,
            "standardized ensembles need a validation set and cannot be served directly");
    models.members = std::move(manifest.members);
    models.config = std::move(manifest.config);
  }
  std::unordered_set<std::string> ids;
  for (const EnsembleMember& m : models.members) ids.insert(m.member_id);
  for (const std::string& path : config.checkpoint_paths) {
    const Checkpoint ckpt = LoadCheckpoint(path);
    EnsembleMember member;
    member.member_id = std::filesystem::path(path).stem().string();
    for (int k = 2; ids.contains(member.member_id); ++k) {
      member.member_id = std::filesystem::path(path).stem().string() + "_" + std::to_string(k);
    }
    ids.insert(member.member_id);
    member.params = ckpt.params;
    member.length_normalization = ckpt.length_normalization;
    models.members.push_back(std::move(member));
  }
  Require(!models.members.empty(), ErrorCode::kInvalidArgument,
          "serve needs at least one checkpoint or an ensemble manifest");
  if (config.ensemble_manifest && !config.checkpoint_paths.empty()) {
    Require(!models.config.weights.has_value(), ErrorCode::kInvalidArgument,
            "extra checkpoints cannot be combined with fixed ensemble weights");
  }
  ValidateMembers(models.members);
  ValidateEnsembleConfig(models.config, models.members.size());
  return models;
}

ServedModels SingleHeadModels(const HeadParams& params, bool length_normalization,
                              std::string member_id) {
  EnsembleMember member;
  member.member_id = std::move(member_id);
  member.params = params;
  member.length_normalization = length_normalization;
  ServedModels models;
  models.members.push_back(std::move(member));
  return models;
}

json ErrorResponse(const json& request_id, std::string_view code, std::string_view message) {
  return json{{"request_id", request_id},
              {"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

namespace {

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<float> ParseVector(const json& j, const char* what) {
  if (!j.is_array()) throw BadRequest(std::string(what) + " must be an array of numbers");
  std::vector<float> v;
  v.reserve(j.size());
  for (const json& x : j) {
    if (!x.is_number()) throw BadRequest(std::string(what) + " must contain only numbers");
    v.push_back(static_cast<float>(x.get<double>()));
  }
  return v;
}

std::vector<std::vector<float>> ParseEmbeddings(const json& request) {
  std::vector<std::vector<float>> out;
  if (auto it = request.find("embeddings"); it != request.end()) {
    if (!it->is_array()) throw BadRequest("embeddings must be an array of arrays");
    for (const json& row : *it) out.push_back(ParseVector(row, "embeddings[i]"));
  } else if (auto single = request.find("embedding"); single != request.end()) {
    out.push_back(ParseVector(*single, "embedding"));
  }
  return out;
}

std::vector<std::int64_t> ParseLengths(const json& request, std::size_t n) {
  std::vector<std::int64_t> lengths(n, 1);
  if (auto it = request.find("token_lengths"); it != request.end()) {
    if (!it->is_array() || it->size() != n) {
      throw BadRequest(fmt::format("token_lengths must be an array of {} integers", n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*it)[i].is_number_integer()) throw BadRequest("token_lengths must be integers");
      lengths[i] = (*it)[i].get<std::int64_t>();
    }
  } else if (auto single = request.find("token_length"); single != request.end()) {
    if (!single->is_number_integer()) throw BadRequest("token_length must be an integer");
    if (n != 1) throw BadRequest("token_length given for more than one embedding");
    lengths[0] = single->get<std::int64_t>();
  }
  for (std::int64_t l : lengths) {
    if (l < 1) throw BadRequest("token lengths must be >= 1");
  }
  return lengths;
}

Modality ParseRequestModality(const json& request) {
  auto it = request.find("modality");
  if (it == request.end() || it->is_null()) return Modality::kText;
  if (!it->is_string()) throw BadRequest("modality must be a string");
  const std::string name = it->get<std::string>();
  if (name != "text" && name != "multimodal") {
    throw BadRequest("modality must be \"text\" or \"multimodal\"");
  }
  return ParseModality(name);
}

using MemberEmbeddings = std::map<std::string, std::vector<std::vector<float>>>;

// n == 0 takes the row count from the first member listed.
MemberEmbeddings ParseMemberEmbeddings(const json& request, const ServedModels& models,
                                       std::size_t n) {
  MemberEmbeddings out;
  auto it = request.find("member_embeddings");
  if (it == request.end() || it->is_null()) return out;
  if (!it->is_object()) throw BadRequest("member_embeddings must be an object");
  for (const auto& [id, rows] : it->items()) {
    const bool known = std::any_of(models.members.begin(), models.members.end(),
                                   [&](const EnsembleMember& m) { return m.member_id == id; });
    if (!known) throw BadRequest("member_embeddings names unknown member '" + id + "'");
    if (n == 0 && rows.is_array()) n = rows.size();
    if (!rows.is_array() || rows.empty() || rows.size() != n) {
      throw BadRequest(fmt::format("member_embeddings['{}'] must hold {} rows", id, n));
    }
    auto& dest = out[id];
    for (const json& row : rows) dest.push_back(ParseVector(row, "member_embeddings rows"));
  }
  return out;
}

// The served reward for response k: routed, weighted member scores.
double ServedScore(const ServedModels& models, Modality modality,
                   const std::vector<std::vector<float>>& shared,
                   const MemberEmbeddings& per_member, std::size_t k,
                   std::int64_t token_length) {
  const std::vector<std::size_t> routed = Route(modality, models.members);
  const std::vector<double> w = RoutedWeights(models.config, models.members.size(), routed);
  double score = 0.0;
  for (std::size_t i = 0; i < routed.size(); ++i) {
    const EnsembleMember& member = models.members[routed[i]];
    const std::vector<float>* embedding = nullptr;
    if (auto it = per_member.find(member.member_id); it != per_member.end()) {
      embedding = &it->second[k];
    } else if (k < shared.size()) {
      embedding = &shared[k];
    } else {
      throw BadRequest(fmt::format("no embedding for response {} (member '{}')", k,
                                   member.member_id));
    }
    if (embedding->size() != member.params.config.input_dim) {
      Fail(ErrorCode::kDimMismatch,
           fmt::format("embedding {} has dimension {}, member '{}' expects {}", k,
                       embedding->size(), member.member_id,
                       member.params.config.input_dim));
    }
    score += w[i] * MemberScore(member, *embedding, token_length);
  }
  return score;
}

json Info(const ServedModels& models) {
  json members = json::array();
  json dims = json::object();
  for (const EnsembleMember& m : models.members) {
    json affinity = json::array();
    for (Modality mod : m.modality_affinity) affinity.push_back(std::string(ModalityName(mod)));
    members.push_back({{"member_id", m.member_id},
                       {"input_dim", m.params.config.input_dim},
                       {"layer_count", m.params.config.layer_count},
                       {"activation", std::string(ActivationName(m.params.config.activation))},
                       {"length_normalization", m.length_normalization},
                       {"modality_affinity", affinity},
                       {"backbone_tag", m.backbone_tag}});
    dims[m.member_id] = m.params.config.input_dim;
  }
  json info{{"dim", models.members.front().params.config.input_dim},
            {"dims", dims},
            {"members", members},
            {"strategy", std::string(StrategyName(models.config.strategy))},
            {"strategies", {"average", "accuracy", "confidence"}},
            {"schemes", {"rule", "model", "hybrid", "pairwise"}},
            {"format_version", kCheckpointFormatVersion},
            {"protocol_version", kProtocolVersion}};
  if (models.config.weights) info["weights"] = *models.config.weights;
  return info;
}

json Score(const json& request, const ServedModels& models) {
  const auto embeddings = ParseEmbeddings(request);
  const MemberEmbeddings per_member =
      ParseMemberEmbeddings(request, models, embeddings.size());
  std::size_t n = embeddings.size();
  if (n == 0 && !per_member.empty()) n = per_member.begin()->second.size();
  if (n == 0) throw BadRequest("score needs \"embedding\" or \"embeddings\"");
  const auto lengths = ParseLengths(request, n);
  const Modality modality = ParseRequestModality(request);
  std::vector<double> rewards(n);
  for (std::size_t k = 0; k < n; ++k) {
    rewards[k] = ServedScore(models, modality, embeddings, per_member, k, lengths[k]);
  }
  return json{{"rewards", rewards}};
}

json ScoreGroup(const json& request, const ServedModels& models) {
  auto scheme_it = request.find("scheme");
  if (scheme_it == request.end() || !scheme_it->is_string()) {
    throw BadRequest("score_group needs a \"scheme\" string");
  }
  const RewardScheme scheme = ParseRewardScheme(scheme_it->get<std::string>());
  const auto embeddings = ParseEmbeddings(request);

  std::vector<std::optional<std::string>> texts;
  if (auto it = request.find("texts"); it != request.end() && !it->is_null()) {
    if (!it->is_array()) throw BadRequest("texts must be an array");
    for (const json& t : *it) {
      if (t.is_null()) {
        texts.emplace_back();
      } else if (t.is_string()) {
        texts.emplace_back(t.get<std::string>());
      } else {
        throw BadRequest("texts entries must be strings or null");
      }
    }
  }
  std::optional<PairwiseScoreMatrix> pairwise;
  if (auto it = request.find("pairwise_scores"); it != request.end() && !it->is_null()) {
    if (!it->is_array()) throw BadRequest("pairwise_scores must be an n x n array");
    const std::size_t m = it->size();
    std::vector<double> flat;
    for (std::size_t i = 0; i < m; ++i) {
      const json& row = (*it)[i];
      if (!row.is_array() || row.size() != m) {
        throw BadRequest("pairwise_scores must be an n x n array");
      }
      for (std::size_t j = 0; j < m; ++j) {
        flat.push_back(i == j || !row[j].is_number() ? 0.0 : row[j].get<double>());
        if (i != j && !row[j].is_number()) throw BadRequest("pairwise_scores must be numbers");
      }
    }
    pairwise.emplace(m, std::move(flat));
  }

  std::size_t n = std::max(embeddings.size(), texts.size());
  if (n == 0 && pairwise) n = pairwise->n();
  if (n == 0) throw BadRequest("score_group needs embeddings, texts or pairwise_scores");
  if (!embeddings.empty() && embeddings.size() != n) {
    throw BadRequest("embeddings and texts have different lengths");
  }
  if (!texts.empty() && texts.size() != n) {
    throw BadRequest("embeddings and texts have different lengths");
  }
  const MemberEmbeddings per_member = ParseMemberEmbeddings(request, models, n);
  const auto lengths = ParseLengths(request, n);
  const Modality modality = ParseRequestModality(request);

  RolloutGroup group;
  group.prompt_id = request.value("prompt_id", std::string());
  for (std::size_t k = 0; k < n; ++k) {
    RolloutResponse r;
    r.response_id = std::to_string(k);
    if (k < texts.size()) r.text = texts[k];
    if (k < embeddings.size()) r.embedding = embeddings[k];
    r.token_length = lengths[k];
    group.responses.push_back(std::move(r));
  }
  if (auto it = request.find("ground_truth"); it != request.end() && !it->is_null()) {
    if (!it->is_object() || !it->contains("answer") || !(*it)["answer"].is_string()) {
      throw BadRequest("ground_truth must be {\"answer\": string, ...}");
    }
    GroundTruth gt;
    gt.answer = (*it)["answer"].get<std::string>();
    if (auto mode = it->find("match_normalization"); mode != it->end()) {
      gt.match_normalization = ParseMatchNormalization(mode->get<std::string>());
    }
    group.ground_truth = std::move(gt);
  }

  const bool needs_model = scheme == RewardScheme::kModelOnly || scheme == RewardScheme::kHybrid;
  if (needs_model && embeddings.empty() && per_member.empty()) {
    Fail(ErrorCode::kSchemeRequirement,
         std::string(RewardSchemeName(scheme)) + " scheme needs embeddings");
  }
  if ((scheme == RewardScheme::kRuleOnly || scheme == RewardScheme::kHybrid) &&
      group.ground_truth && texts.empty()) {
    Fail(ErrorCode::kSchemeRequirement,
         std::string(RewardSchemeName(scheme)) + " scheme needs texts");
  }
  const ResponseScorer scorer = [&](const RolloutResponse& r) {
    const std::size_t k = std::stoul(r.response_id);
    return ServedScore(models, modality, embeddings, per_member, k, r.token_length);
  };
  const std::vector<double> rewards =
      GroupRewards(group, scheme, scorer, pairwise ? &*pairwise : nullptr);
  json response{{"rewards", rewards}};
  switch (scheme) {
    case RewardScheme::kRuleOnly:
    case RewardScheme::kHybrid:
      response["normalized"] = rewards;
      break;
    case RewardScheme::kModelOnly: {
      std::vector<double> normalized;
      for (double r : rewards) normalized.push_back(Sigmoid(r));
      response["normalized"] = normalized;
      break;
    }
    case RewardScheme::kPairwiseAggregate:
      break;
  }
  return response;
}

std::string_view WireCode(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimMismatch: return "DIM_MISMATCH";
    case ErrorCode::kSchemeRequirement: return "SCHEME_REQUIREMENT";
    default: return "BAD_REQUEST";
  }
}

}  // namespace

json HandleRequest(const json& request, const ServedModels& models) {
  json request_id = nullptr;
  try {
    if (!request.is_object()) throw BadRequest("request must be a JSON object");
    if (auto it = request.find("request_id"); it != request.end()) request_id = *it;
    auto op_it = request.find("op");
    if (op_it == request.end() || !op_it->is_string()) {
      throw BadRequest("request needs an \"op\" string");
    }
    const std::string op = op_it->get<std::string>();
    json response;
    if (op == "info") {
      response = json{{"rewards", json::array()}, {"info", Info(models)}};
    } else if (op == "score") {
      response = Score(request, models);
    } else if (op == "score_group") {
      response = ScoreGroup(request, models);
    } else {
      throw BadRequest("unknown op '" + op + "'");
    }
    response["request_id"] = request_id;
    return response;
  } catch (const BadRequest& e) {
    return ErrorResponse(request_id, "BAD_REQUEST", e.what());
  } catch (const Error& e) {
    return ErrorResponse(request_id, WireCode(e.code()), e.what());
  } catch (const json::exception& e) {
    return ErrorResponse(request_id, "BAD_REQUEST", e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(request_id, "INTERNAL", e.what());
  }
}

std::string HandleLine(std::string_view line, const ServedModels& models,
                       std::size_t request_size_limit) {
  if (line.size() > request_size_limit) {
    return ErrorResponse(nullptr, "OVERSIZE",
                         fmt::format("request of {} bytes exceeds the {} byte limit",
                                     line.size(), request_size_limit))
        .dump();
  }
  json request;
  try {
    request = json::parse(line);
  } catch (const json::exception& e) {
    return ErrorResponse(nullptr, "BAD_REQUEST", std::string("malformed JSON: ") + e.what())
        .dump();
  }
  return HandleRequest(request, models).dump();
}

// ---------------------------------------------------------------------------
// TCP transport

namespace {

constexpr int kPollMillis = 100;

bool SendAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::pair<std::string, std::uint16_t> SplitBind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  Require(colon != std::string::npos, ErrorCode::kInvalidArgument,
          "bind address must be host:port, got '" + bind + "'");
  std::string host = bind.substr(0, colon);
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  const int port = std::stoi(bind.substr(colon + 1));
  Require(port >= 0 && port <= 65535, ErrorCode::kInvalidArgument, "port out of range");
  return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace

ScoringServer::ScoringServer(std::shared_ptr<const ServedModels> models, ServeConfig config)
    : models_(std::move(models)), config_(std::move(config)) {}

ScoringServer::~ScoringServer() { Stop(); }

void ScoringServer::Start() {
  const auto [host, port] = SplitBind(config_.bind_address);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  Require(listen_fd_ >= 0, ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  Require(::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1, ErrorCode::kInvalidArgument,
          "cannot parse IPv4 address '" + host + "'");
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    Fail(ErrorCode::kIo, "cannot bind " + config_.bind_address + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  stopping_ = false;
  accept_thread_ = std::thread([this] { AcceptLoop(); });
  spdlog::info("serving on {}:{}", host, port_);
}

void ScoringServer::Stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::lock_guard<std::mutex> lock(connections_mu_);
  for (Connection& c : connections_) {
    if (c.thread.joinable()) c.thread.join();
  }
  connections_.clear();
}

void ScoringServer::ReapFinished() {
  std::lock_guard<std::mutex> lock(connections_mu_);
  for (auto it = connections_.begin(); it != connections_.end();) {
    if (it->done) {
      it->thread.join();
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

void ScoringServer::AcceptLoop() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, kPollMillis);
    ReapFinished();
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    if (active_ >= config_.max_concurrent_connections) {
      SendAll(fd, ErrorResponse(nullptr, "BUSY", "connection limit reached").dump() + "\n");
      ::close(fd);
      continue;
    }
    ++active_;
    std::lock_guard<std::mutex> lock(connections_mu_);
    Connection& c = connections_.emplace_back();
    c.thread = std::thread([this, fd, &c] { Serve(fd, &c); });
  }
}

void ScoringServer::Serve(int fd, Connection* connection) {
  std::string buffer;
  bool discarding = false;  // skipping the tail of an oversize line
  char chunk[65536];
  bool open = true;
  while (open && !stopping_) {
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, kPollMillis);
    if (ready <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      std::string_view line(buffer.data() + start, nl - start);
      if (discarding) {
        discarding = false;
        continue;
      }
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      const std::string reply = HandleLine(line, *models_, config_.request_size_limit);
      if (!SendAll(fd, reply + "\n")) {
        open = false;
        break;
      }
    }
    buffer.erase(0, start);
    if (open && buffer.size() > config_.request_size_limit && !discarding) {
      open = SendAll(fd, HandleLine(buffer, *models_, config_.request_size_limit) + "\n");
      buffer.clear();
      discarding = true;
    } else if (discarding) {
      buffer.clear();
    }
  }
  ::close(fd);
  --active_;
  connection->done = true;
}

}  // namespace reward_forge
