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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "screening/digest.hpp"
#include "screening/image.hpp"

namespace screening {

/// 1280-dimensional feature vector produced by a frozen backbone.
class Embedding {
 public:
  static constexpr std::size_t kDim = 1280;

  Embedding() : values_(kDim, 0.0) {}
  /// Throws ShapeError on wrong length, InferenceError on non-finite values.
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

enum class BackboneKind { onnx_model, mock };

/// A loaded, immutable feature extractor. Copies share the same underlying
/// model; concurrent embed() calls are safe.
class Backbone {
 public:
  static constexpr std::size_t kOutputDim = Embedding::kDim;

  class Impl;

  explicit Backbone(std::shared_ptr<const Impl> impl);

  BackboneKind kind() const noexcept;
  /// Hex content digest for ONNX files; "mock-<seed>" for the mock.
  const std::string& model_version() const noexcept;
  /// Stored in model artifacts to pair a head with its feature space.
  const Digest& digest() const noexcept;
  std::size_t output_dim() const noexcept { return kOutputDim; }

  Embedding embed(const TensorImage& tensor) const;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Loads an ONNX feature extractor mapping a 224x224x3 image (NHWC or
/// NCHW) to 1280 values. Throws FileNotFound, FormatError,
/// BackboneShapeError, or InferenceError (unsupported operators).
Backbone load_backbone(const std::filesystem::path& path);

/// Deterministic stand-in: 16x16 average pooling to a 14x14x3 grid, a seeded
/// Gaussian linear projection to 1280 values, then tanh.
Backbone make_mock_backbone(std::uint64_t seed);

/// "mock:<seed>" selects the mock backbone; anything else is a file path.
Backbone open_backbone(std::string_view spec);

Embedding embed(const Backbone& backbone, const TensorImage& tensor);

/// Element i equals embed(backbone, tensors[i]). Failures are rethrown as
/// InferenceError carrying the failing index.
std::vector<Embedding> embed_batch(const Backbone& backbone, std::span<const TensorImage> tensors);

}  // namespace screening
