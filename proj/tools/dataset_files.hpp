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
#include <optional>
#include <string>
#include <vector>

#include "screening/dataset.hpp"
#include "screening/digest.hpp"
#include "screening/trainer.hpp"

namespace screening::cli {

struct LabelRow {
  std::string filename;
  Label label = Label::negative;
  std::string source;  // empty when the CSV has no source column
};

/// Reads "filename,label[,source]" with a header row. Throws FormatError.
std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path);

/// Facts about a cache that the SGEMB1 records do not carry. Stored next
/// to the cache as CACHE.meta.json.
struct CacheMeta {
  std::string backbone_version;
  Digest backbone_digest{};
  std::string normalization_id;
  std::size_t augment = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> files;
  std::vector<std::string> sources;
  /// Index of the original behind each record of CACHE.aug.
  std::vector<std::size_t> augmented_parent;
};

std::filesystem::path meta_path(const std::filesystem::path& cache);
std::filesystem::path augmented_path(const std::filesystem::path& cache);

void write_cache_meta(const std::filesystem::path& cache, const CacheMeta& meta);
std::optional<CacheMeta> read_cache_meta(const std::filesystem::path& cache);

struct LoadedDataset {
  std::vector<LabeledExample> examples;
  std::vector<AugmentedExample> augmented;
  std::optional<CacheMeta> meta;
};

/// The cache plus, when the sidecar lists them, its augmented copies.
/// Without a sidecar, source ids fall back to the hex image digest.
LoadedDataset load_dataset(const std::filesystem::path& cache);

}  // namespace screening::cli
