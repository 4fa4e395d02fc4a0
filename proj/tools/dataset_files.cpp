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

#include "dataset_files.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "screening/embedding_cache.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"

namespace screening::cli {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::stringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::uint64_t offset = 0;
  if (!std::getline(in, line)) throw FormatError("labels file is empty", 0);
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "filename" || header[1] != "label" ||
      (header.size() == 3 && header[2] != "source") || header.size() > 3) {
    throw FormatError("labels header must be 'filename,label' (optionally ',source')", 0);
  }
  offset += line.size() + 1;
  std::vector<LabelRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::uint64_t at = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size() || f[0].empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields",
                        at);
    }
    LabelRow row;
    row.filename = f[0];
    if (f[1] == "0") {
      row.label = Label::negative;
    } else if (f[1] == "1") {
      row.label = Label::positive;
    } else {
      throw FormatError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + f[1] + "'", at);
    }
    if (f.size() == 3) row.source = f[2];
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInput("labels file has no rows");
  return rows;
}

std::filesystem::path meta_path(const std::filesystem::path& cache) {
  auto p = cache;
  p += ".meta.json";
  return p;
}

std::filesystem::path augmented_path(const std::filesystem::path& cache) {
  auto p = cache;
  p += ".aug";
  return p;
}

void write_cache_meta(const std::filesystem::path& cache, const CacheMeta& meta) {
  nlohmann::ordered_json j;
  j["backbone_version"] = meta.backbone_version;
  j["backbone_digest"] = to_hex(meta.backbone_digest);
  j["normalization_id"] = meta.normalization_id;
  j["augment"] = meta.augment;
  j["seed"] = meta.seed;
  j["files"] = meta.files;
  j["sources"] = meta.sources;
  j["augmented_parent"] = meta.augmented_parent;
  const std::string text = j.dump(2) + "\n";
  write_file(meta_path(cache), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::optional<CacheMeta> read_cache_meta(const std::filesystem::path& cache) {
  const auto path = meta_path(cache);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto bytes = read_file(path);
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    CacheMeta m;
    m.backbone_version = j.at("backbone_version").get<std::string>();
    m.backbone_digest = digest_from_hex(j.at("backbone_digest").get<std::string>());
    m.normalization_id = j.at("normalization_id").get<std::string>();
    m.augment = j.at("augment").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.files = j.at("files").get<std::vector<std::string>>();
    m.sources = j.at("sources").get<std::vector<std::string>>();
    m.augmented_parent = j.at("augmented_parent").get<std::vector<std::size_t>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
}

LoadedDataset load_dataset(const std::filesystem::path& cache) {
  LoadedDataset out;
  const auto records = read_embedding_cache(cache);
  out.meta = read_cache_meta(cache);
  if (out.meta && out.meta->sources.size() != records.size()) {
    throw FormatError(meta_path(cache).string() + " lists " + std::to_string(out.meta->sources.size()) +
                          " sources for " + std::to_string(records.size()) + " records",
                      0);
  }
  out.examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.examples.push_back({records[i].embedding, records[i].label,
                            out.meta ? out.meta->sources[i] : to_hex(records[i].source_digest)});
  }
  if (out.meta && !out.meta->augmented_parent.empty()) {
    const auto aug = read_embedding_cache(augmented_path(cache));
    if (aug.size() != out.meta->augmented_parent.size()) {
      throw FormatError(augmented_path(cache).string() + " does not match its sidecar", 0);
    }
    for (std::size_t i = 0; i < aug.size(); ++i) {
      const std::size_t parent = out.meta->augmented_parent[i];
      if (parent >= out.examples.size()) throw FormatError("augmented record refers to a missing original", 0);
      out.augmented.push_back({parent, {aug[i].embedding, aug[i].label, out.examples[parent].source_id}});
    }
  }
  return out;
}

}  // namespace screening::cli
