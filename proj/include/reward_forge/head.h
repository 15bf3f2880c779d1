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

// The scalar reward head: a small MLP read on top of a frozen embedding.
//
//   h_0 = e
//   h_k = act(W_k h_{k-1} + b_k)      for every layer except the last
//   r   = W_L h_{L-1} + b_L           (1 output, no activation)
//
// Widths: layer 0 maps input_dim -> hidden_dim, inner layers are
// hidden_dim x hidden_dim and the last layer maps to a single output. With
// layer_count == 1 the head is one linear map and the activation is unused.
// An Identity head with more than one layer is kept as literally stacked
// linear maps, even though it is no more expressive than a single one.

#ifndef REWARD_FORGE_HEAD_H_
#define REWARD_FORGE_HEAD_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reward_forge {

enum class ActivationKind { kIdentity, kTanh, kSiLU };

std::string_view ActivationName(ActivationKind kind);
// Accepts "identity" (alias "none"), "tanh" and "silu", case-insensitive.
ActivationKind ParseActivation(std::string_view name);

double ActivationApply(ActivationKind kind, double x);
double ActivationDerivative(ActivationKind kind, double x);

inline constexpr int kMinLayers = 1;
inline constexpr int kMaxLayers = 5;

struct HeadConfig {
  std::size_t input_dim = 0;
  int layer_count = 2;
  std::size_t hidden_dim = 0;  // 0 means "same as input_dim"
  ActivationKind activation = ActivationKind::kSiLU;
  std::uint64_t seed = 0;

  std::size_t EffectiveHiddenDim() const {
    return hidden_dim == 0 ? input_dim : hidden_dim;
  }
  bool operator==(const HeadConfig&) const = default;
};

void ValidateHeadConfig(const HeadConfig& config);

// One affine map, weights row-major (rows = outputs, cols = inputs).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& W(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double W(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
  bool operator==(const DenseLayer&) const = default;
};

struct HeadParams {
  HeadConfig config;
  std::vector<DenseLayer> layers;

  bool operator==(const HeadParams&) const = default;
};

// Gradient of a scalar with respect to every entry of a HeadParams, laid out
// with the same shapes.
struct HeadGradient {
  std::vector<DenseLayer> layers;

  bool operator==(const HeadGradient&) const = default;
};

// (rows, cols) of each layer implied by the config.
std::vector<std::pair<std::size_t, std::size_t>> LayerShapes(
    const HeadConfig& config);

std::size_t ParamCount(const HeadConfig& config);

// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and zero
// biases, seeded from config.seed.
// The returned config spells out the effective hidden_dim.
HeadParams InitHead(const HeadConfig& config);

// Checks shape chaining, the scalar output and finiteness of every entry.
void ValidateHeadParams(const HeadParams& params);

double HeadForward(const HeadParams& params, std::span<const double> embedding);
double HeadForward(const HeadParams& params, std::span<const float> embedding);

// Analytic gradient of upstream * HeadForward(params, embedding).
HeadGradient HeadGradientOf(const HeadParams& params,
                            std::span<const double> embedding, double upstream);
HeadGradient HeadGradientOf(const HeadParams& params,
                            std::span<const float> embedding, double upstream);

HeadGradient ZeroGradient(const HeadParams& params);
// acc += delta, entry by entry, in layer/row-major order.
void AccumulateGradient(HeadGradient& acc, const HeadGradient& delta);

// Flat views in layer order: weights then bias of each layer.
std::vector<double> FlattenParams(const HeadParams& params);
std::vector<double> FlattenGradient(const HeadGradient& grad);
HeadParams UnflattenParams(const HeadConfig& config,
                           std::span<const double> flat);

}  // namespace reward_forge

#endif  // REWARD_FORGE_HEAD_H_
