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
#include <span>
#include <string>
#include <vector>

#include "screening/digest.hpp"
#include "screening/head.hpp"
#include "screening/image.hpp"

namespace screening {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelMetadata {
  Digest backbone_digest{};
  std::string normalization_id{kNormalizationId};
  double dropout_rate = 0.5;
  double threshold = 0.5;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct LoadedModel {
  HeadParams params;
  ModelMetadata metadata;
  /// Hex SHA-256 of the artifact bytes.
  std::string model_version;
};

/// Artifact layout, all integers and floats little-endian:
///
///   "SGHD1"                      5 bytes
///   format version               u32
///   backbone digest              32 bytes
///   normalization id             u32 length + UTF-8 bytes
///   dropout rate, threshold      f64, f64
///   layer count (4)              u32
///   per layer: out, in           u32, u32
///   W1 b1 W2 b2 W3 b3 W4 b4      f64 each, weights row-major
std::vector<std::uint8_t> serialize_model(const HeadParams& params, const ModelMetadata& meta);

/// Throws FormatError (bad magic, truncation, trailing bytes; with offset),
/// VersionError, or ShapeError when the dimension table differs from the
/// canonical head.
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

std::size_t model_header_size(const ModelMetadata& meta);

/// Throws IoError when the file cannot be written.
void save_model(const HeadParams& params, const ModelMetadata& meta,
                const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace screening
