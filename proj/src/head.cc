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

#include "reward_forge/head.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "reward_forge/error.h"
#include "reward_forge/numeric.h"

namespace reward_forge {
namespace {

template <typename T>
void CheckEmbedding(const HeadParams& params, std::span<const T> embedding) {
  if (embedding.size() != params.config.input_dim) {
    Fail(ErrorCode::kDimMismatch,
         "embedding has dimension " + std::to_string(embedding.size()) +
             ", head expects " + std::to_string(params.config.input_dim));
  }
}

// Pre-activations of every non-final layer and the inputs seen by every
// layer. inputs[k] is the vector fed to layer k.
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre_activations;
  double output = 0.0;
};

void Affine(const DenseLayer& layer, std::span<const double> in,
            std::vector<double>& out) {
  out.assign(layer.rows, 0.0);
  for (std::size_t r = 0; r < layer.rows; ++r) {
    const double* w = layer.weights.data() + r * layer.cols;
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < layer.cols; ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
}

template <typename T>
ForwardTrace Trace(const HeadParams& params, std::span<const T> embedding) {
  CheckEmbedding(params, embedding);
  const std::size_t n_layers = params.layers.size();
  const ActivationKind act = params.config.activation;
  ForwardTrace trace;
  trace.inputs.resize(n_layers);
  trace.pre_activations.resize(n_layers > 0 ? n_layers - 1 : 0);
  trace.inputs[0].assign(embedding.begin(), embedding.end());
  std::vector<double> z;
  for (std::size_t k = 0; k < n_layers; ++k) {
    Affine(params.layers[k], trace.inputs[k], z);
    if (k + 1 == n_layers) {
      trace.output = z[0];
      break;
    }
    trace.pre_activations[k] = z;
    auto& next = trace.inputs[k + 1];
    next.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) next[i] = ActivationApply(act, z[i]);
  }
  return trace;
}

template <typename T>
double Forward(const HeadParams& params, std::span<const T> embedding) {
  CheckEmbedding(params, embedding);
  const std::size_t n_layers = params.layers.size();
  const ActivationKind act = params.config.activation;
  std::vector<double> h(embedding.begin(), embedding.end());
  std::vector<double> z;
  for (std::size_t k = 0; k + 1 < n_layers; ++k) {
    Affine(params.layers[k], h, z);
    for (double& v : z) v = ActivationApply(act, v);
    h.swap(z);
  }
  Affine(params.layers.back(), h, z);
  return z[0];
}

template <typename T>
HeadGradient Gradient(const HeadParams& params, std::span<const T> embedding,
                      double upstream) {
  const ForwardTrace trace = Trace(params, embedding);
  const ActivationKind act = params.config.activation;
  HeadGradient grad = ZeroGradient(params);
  std::vector<double> delta{upstream};
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const DenseLayer& layer = params.layers[k];
    DenseLayer& g = grad.layers[k];
    const std::vector<double>& in = trace.inputs[k];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      g.bias[r] = delta[r];
      double* gw = g.weights.data() + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) gw[c] = delta[r] * in[c];
    }
    if (k == 0) break;
    std::vector<double> prev(layer.cols, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double* w = layer.weights.data() + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += w[c] * delta[r];
    }
    const std::vector<double>& z = trace.pre_activations[k - 1];
    for (std::size_t c = 0; c < prev.size(); ++c) {
      prev[c] *= ActivationDerivative(act, z[c]);
    }
    delta.swap(prev);
  }
  return grad;
}

}  // namespace

std::string_view ActivationName(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kSiLU: return "silu";
  }
  return "identity";
}

ActivationKind ParseActivation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "identity" || lower == "none") return ActivationKind::kIdentity;
  if (lower == "tanh") return ActivationKind::kTanh;
  if (lower == "silu") return ActivationKind::kSiLU;
  Fail(ErrorCode::kInvalidArgument,
       "unknown activation '" + std::string(name) + "'");
}

double ActivationApply(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kIdentity: return x;
    case ActivationKind::kTanh: return std::tanh(x);
    case ActivationKind::kSiLU: return x * Sigmoid(x);
  }
  return x;
}

double ActivationDerivative(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kIdentity: return 1.0;
    case ActivationKind::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::kSiLU: {
      const double s = Sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
  }
  return 1.0;
}

void ValidateHeadConfig(const HeadConfig& config) {
  Require(config.input_dim > 0, ErrorCode::kInvalidArgument,
          "head input_dim must be positive");
  Require(config.layer_count >= kMinLayers && config.layer_count <= kMaxLayers,
          ErrorCode::kInvalidArgument,
          "head layer_count must be in [1,5], got " +
              std::to_string(config.layer_count));
  Require(config.EffectiveHiddenDim() > 0, ErrorCode::kInvalidArgument,
          "head hidden_dim must be positive");
}

std::vector<std::pair<std::size_t, std::size_t>> LayerShapes(
    const HeadConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  if (config.layer_count == 1) {
    shapes.emplace_back(1, config.input_dim);
    return shapes;
  }
  const std::size_t hidden = config.EffectiveHiddenDim();
  shapes.emplace_back(hidden, config.input_dim);
  for (int k = 1; k + 1 < config.layer_count; ++k) shapes.emplace_back(hidden, hidden);
  shapes.emplace_back(1, hidden);
  return shapes;
}

std::size_t ParamCount(const HeadConfig& config) {
  std::size_t total = 0;
  for (const auto& [rows, cols] : LayerShapes(config)) total += rows * cols + rows;
  return total;
}

HeadParams InitHead(const HeadConfig& config) {
  ValidateHeadConfig(config);
  std::mt19937_64 rng(config.seed);
  HeadParams params{config, {}};
  params.config.hidden_dim = config.EffectiveHiddenDim();
  for (const auto& [rows, cols] : LayerShapes(config)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{rows, cols, std::vector<double>(rows * cols),
                     std::vector<double>(rows, 0.0)};
    for (double& w : layer.weights) w = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void ValidateHeadParams(const HeadParams& params) {
  ValidateHeadConfig(params.config);
  const auto shapes = LayerShapes(params.config);
  Require(params.layers.size() == shapes.size(), ErrorCode::kShapeMismatch,
          "head has " + std::to_string(params.layers.size()) +
              " layers, config implies " + std::to_string(shapes.size()));
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const DenseLayer& layer = params.layers[k];
    Require(layer.rows == shapes[k].first && layer.cols == shapes[k].second &&
                layer.weights.size() == layer.rows * layer.cols &&
                layer.bias.size() == layer.rows,
            ErrorCode::kShapeMismatch,
            "layer " + std::to_string(k) + " is " + std::to_string(layer.rows) +
                "x" + std::to_string(layer.cols) + ", expected " +
                std::to_string(shapes[k].first) + "x" +
                std::to_string(shapes[k].second));
    auto finite = [](double v) { return std::isfinite(v); };
    Require(std::all_of(layer.weights.begin(), layer.weights.end(), finite) &&
                std::all_of(layer.bias.begin(), layer.bias.end(), finite),
            ErrorCode::kNonFinite,
            "layer " + std::to_string(k) + " has non-finite parameters");
  }
}

double HeadForward(const HeadParams& params, std::span<const double> embedding) {
  return Forward(params, embedding);
}

double HeadForward(const HeadParams& params, std::span<const float> embedding) {
  return Forward(params, embedding);
}

HeadGradient HeadGradientOf(const HeadParams& params,
                            std::span<const double> embedding, double upstream) {
  return Gradient(params, embedding, upstream);
}

HeadGradient HeadGradientOf(const HeadParams& params,
                            std::span<const float> embedding, double upstream) {
  return Gradient(params, embedding, upstream);
}

HeadGradient ZeroGradient(const HeadParams& params) {
  HeadGradient grad;
  grad.layers.reserve(params.layers.size());
  for (const DenseLayer& layer : params.layers) {
    grad.layers.push_back(DenseLayer{layer.rows, layer.cols,
                                     std::vector<double>(layer.weights.size(), 0.0),
                                     std::vector<double>(layer.bias.size(), 0.0)});
  }
  return grad;
}

void AccumulateGradient(HeadGradient& acc, const HeadGradient& delta) {
  Require(acc.layers.size() == delta.layers.size(), ErrorCode::kShapeMismatch,
          "gradient layer counts differ");
  for (std::size_t k = 0; k < acc.layers.size(); ++k) {
    DenseLayer& a = acc.layers[k];
    const DenseLayer& d = delta.layers[k];
    Require(a.weights.size() == d.weights.size() && a.bias.size() == d.bias.size(),
            ErrorCode::kShapeMismatch, "gradient layer shapes differ");
    for (std::size_t i = 0; i < a.weights.size(); ++i) a.weights[i] += d.weights[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += d.bias[i];
  }
}

namespace {

std::vector<double> Flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> flat;
  for (const DenseLayer& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

}  // namespace

std::vector<double> FlattenParams(const HeadParams& params) {
  return Flatten(params.layers);
}

std::vector<double> FlattenGradient(const HeadGradient& grad) {
  return Flatten(grad.layers);
}

HeadParams UnflattenParams(const HeadConfig& config, std::span<const double> flat) {
  ValidateHeadConfig(config);
  Require(flat.size() == ParamCount(config), ErrorCode::kShapeMismatch,
          "flat parameter vector has " + std::to_string(flat.size()) +
              " entries, config implies " + std::to_string(ParamCount(config)));
  HeadParams params{config, {}};
  params.config.hidden_dim = config.EffectiveHiddenDim();
  std::size_t offset = 0;
  for (const auto& [rows, cols] : LayerShapes(config)) {
    DenseLayer layer{rows, cols, {}, {}};
    layer.weights.assign(flat.begin() + offset, flat.begin() + offset + rows * cols);
    offset += rows * cols;
    layer.bias.assign(flat.begin() + offset, flat.begin() + offset + rows);
    offset += rows;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace reward_forge
