// Copyright 2026 The Handwriting Screening Authors. All Rights Reserved.
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

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "screening/backbone.hpp"
#include "screening/label.hpp"

namespace screening {

/// Widths of the dense head: embedding -> 800 -> 400 -> 200 -> 1.
inline constexpr std::array<std::size_t, 5> kLayerWidths{1280, 800, 400, 200, 1};
inline constexpr std::size_t kLayerCount = kLayerWidths.size() - 1;
inline constexpr std::size_t kHiddenCount = kLayerCount - 1;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One affine layer; weights are out x in, row-major.
struct DenseLayer {
  RowMatrix weights;
  Eigen::VectorXd bias;

  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(weights.size() + bias.size());
  }
};

/// Every trainable value of the head. Gradients use the same container.
struct HeadParams {
  std::array<DenseLayer, kLayerCount> layers;

  /// All-zero parameters with the canonical shapes.
  static HeadParams zeros();

  bool has_canonical_shapes() const noexcept;
  bool all_finite() const noexcept;

  /// The eight parameter tensors in storage order W1, b1, ..., W4, b4.
  std::array<std::span<double>, 2 * kLayerCount> tensors();
  std::array<std::span<const double>, 2 * kLayerCount> tensors() const;

  friend bool operator==(const HeadParams& a, const HeadParams& b);
};

using HeadGradients = HeadParams;

struct ParamCounts {
  std::array<std::size_t, kLayerCount> per_layer{};
  std::size_t total = 0;
};

ParamCounts param_count(const HeadParams& params);

/// He-normal weights (variance 2/fan_in) for the ReLU layers, variance
/// 1/fan_in for the sigmoid output; zero biases. Deterministic per seed.
HeadParams init_params(std::uint64_t seed);

enum class DropoutMode { train, inference };

struct DropoutSpec {
  double rate = 0.5;
  DropoutMode mode = DropoutMode::inference;

  static DropoutSpec train(double rate) { return {rate, DropoutMode::train}; }
  static DropoutSpec inference() { return {0.5, DropoutMode::inference}; }
};

/// Intermediate values kept for backpropagation.
struct ForwardTrace {
  Eigen::VectorXd input;
  std::array<Eigen::VectorXd, kLayerCount> pre_activations;
  /// Inputs to the next layer: relu(z) multiplied by the dropout mask.
  std::array<Eigen::VectorXd, kHiddenCount> activations;
  /// Inverted-dropout masks with entries 0 or 1/(1-rate); empty in inference mode.
  std::array<Eigen::VectorXd, kHiddenCount> masks;
  double logit = 0.0;
  double probability = 0.5;
};

struct ForwardResult {
  double probability = 0.5;
  ForwardTrace trace;
};

/// sigma(W4 . relu-stack(e) + b4). In train mode a mask drawn from `seed`
/// follows each hidden activation; inference mode draws nothing. The
/// probability is kept strictly inside (0, 1). Throws NumericError.
ForwardResult forward(const HeadParams& params, const Embedding& embedding,
                      const DropoutSpec& dropout, std::uint64_t seed = 0);

/// The three dropout masks forward() uses for `seed`.
std::array<Eigen::VectorXd, kHiddenCount> dropout_masks(double rate, std::uint64_t seed);

/// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12].
double bce_loss(double probability, Label label);

/// d(bce)/d(theta) for the example recorded in `trace`, reusing its masks.
/// Throws NumericError on non-finite gradients.
HeadGradients backward(const HeadParams& params, const ForwardTrace& trace, Label label);

/// Mini-batch forward + backward in matrix form. Example i uses the masks
/// of dropout_masks(rate, seeds[i]), so the result matches averaging
/// backward() over the batch.
struct BatchOutcome {
  HeadGradients mean_gradient;
  std::vector<double> probabilities;
  double mean_loss = 0.0;
};

BatchOutcome batch_gradient(const HeadParams& params, std::span<const Embedding* const> inputs,
                            std::span<const Label> labels, const DropoutSpec& dropout,
                            std::span<const std::uint64_t> seeds);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerConfig config;
  HeadParams m;  // first moments
  HeadParams v;  // second moments
  std::uint64_t step = 0;

  /// Zeroed moments; throws Error on a negative or non-finite learning rate.
  static OptimizerState create(const OptimizerConfig& config);
};

/// SGD: theta -= lr * g. Adam: bias-corrected moment update.
void apply_update(HeadParams& params, const HeadGradients& grads, OptimizerState& state);

}  // namespace screening
