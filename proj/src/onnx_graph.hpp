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

// Minimal ONNX graph interpreter (float32, batch-first NCHW convolution).
// Supports the operator set produced when exporting MobileNetV2-style
// feature extractors.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace screening::onnx_rt {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;          // float tensors
  std::vector<std::int64_t> ints;   // integer tensors (shapes, axes, pads)
  bool is_int = false;

  std::size_t numel() const;
};

/// Declared tensor shape; -1 marks a symbolic or missing dimension.
using DeclaredShape = std::vector<std::int64_t>;

class Graph {
 public:
  /// Parses a serialized ModelProto. Throws FormatError on malformed
  /// protobuf and InferenceError on unsupported operators.
  static Graph parse(std::span<const std::uint8_t> bytes);

  const DeclaredShape& input_shape() const noexcept { return input_shape_; }
  const DeclaredShape& output_shape() const noexcept { return output_shape_; }

  /// Evaluates the graph on a single input. Throws InferenceError.
  Tensor run(Tensor input) const;

  struct Node;
  Graph();
  ~Graph();
  Graph(Graph&&) noexcept;
  Graph& operator=(Graph&&) noexcept;

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<std::pair<std::string, Tensor>> initializers_;
  std::string input_name_;
  std::string output_name_;
  DeclaredShape input_shape_;
  DeclaredShape output_shape_;
};

}  // namespace screening::onnx_rt
