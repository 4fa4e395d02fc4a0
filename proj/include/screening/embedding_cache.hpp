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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "screening/backbone.hpp"
#include "screening/digest.hpp"
#include "screening/label.hpp"

namespace screening {

/// One cached embedding.
///
/// File layout (little-endian): magic "SGEMB1", u64 record count, then per
/// record a 32-byte source digest, a label byte (0 or 1) and 1280 float64.
struct CacheRecord {
  Digest source_digest{};
  Label label = Label::negative;
  Embedding embedding;

  friend bool operator==(const CacheRecord&, const CacheRecord&) = default;
};

inline constexpr std::size_t kCacheRecordBytes = 32 + 1 + Embedding::kDim * 8;

std::vector<std::uint8_t> encode_embedding_cache(std::span<const CacheRecord> records);
/// Throws FormatError (with byte offset) on bad magic, truncation, a label
/// byte outside {0,1} or trailing data.
std::vector<CacheRecord> decode_embedding_cache(std::span<const std::uint8_t> bytes);

void write_embedding_cache(const std::filesystem::path& path, std::span<const CacheRecord> records);
std::vector<CacheRecord> read_embedding_cache(const std::filesystem::path& path);

}  // namespace screening
