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

#include "screening/model_io.hpp"

#include <cmath>
#include <string_view>

#include "byte_io.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"

namespace screening {

namespace {
constexpr std::string_view kMagic = "SGHD1";
}

std::size_t model_header_size(const ModelMetadata& meta) {
  return kMagic.size() + 4 + 32 + 4 + meta.normalization_id.size() + 8 + 8 + 4 + kLayerCount * 8;
}

std::vector<std::uint8_t> serialize_model(const HeadParams& params, const ModelMetadata& meta) {
  if (!params.has_canonical_shapes()) throw ShapeError("head parameters have non-canonical shapes");
  detail::ByteWriter w;
  w.buffer().reserve(model_header_size(meta) + param_count(params).total * 8);
  w.text(kMagic);
  w.u32(kModelFormatVersion);
  w.bytes(meta.backbone_digest);
  w.u32(static_cast<std::uint32_t>(meta.normalization_id.size()));
  w.text(meta.normalization_id);
  w.f64(meta.dropout_rate);
  w.f64(meta.threshold);
  w.u32(static_cast<std::uint32_t>(kLayerCount));
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    w.u32(static_cast<std::uint32_t>(kLayerWidths[k + 1]));
    w.u32(static_cast<std::uint32_t>(kLayerWidths[k]));
  }
  for (const auto t : params.tensors()) w.f64s(t);
  return std::move(w.buffer());
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.bytes(kMagic.size(), "magic");
  if (std::string_view(reinterpret_cast<const char*>(magic.data()), magic.size()) != kMagic) {
    throw FormatError("not a model artifact (bad magic)", 0);
  }
  const std::uint32_t version = r.u32("format version");
  if (version != kModelFormatVersion) {
    throw VersionError("unsupported model format version " + std::to_string(version) +
                       " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
  }
  LoadedModel m;
  const auto digest = r.bytes(32, "backbone digest");
  std::copy(digest.begin(), digest.end(), m.metadata.backbone_digest.begin());
  const std::uint32_t id_len = r.u32("normalization id length");
  const auto id = r.bytes(id_len, "normalization id");
  m.metadata.normalization_id.assign(reinterpret_cast<const char*>(id.data()), id.size());
  const std::uint64_t meta_at = r.offset();
  m.metadata.dropout_rate = r.f64("dropout rate");
  m.metadata.threshold = r.f64("threshold");
  if (!std::isfinite(m.metadata.dropout_rate) || !std::isfinite(m.metadata.threshold)) {
    throw FormatError("non-finite dropout rate or threshold", meta_at);
  }
  const std::uint32_t layers = r.u32("layer count");
  if (layers != kLayerCount) {
    throw ShapeError("artifact has " + std::to_string(layers) + " layers, expected " +
                     std::to_string(kLayerCount));
  }
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const std::uint32_t out = r.u32("layer output width");
    const std::uint32_t in = r.u32("layer input width");
    if (out != kLayerWidths[k + 1] || in != kLayerWidths[k]) {
      throw ShapeError("layer " + std::to_string(k + 1) + " is " + std::to_string(out) + "x" +
                       std::to_string(in) + ", expected " + std::to_string(kLayerWidths[k + 1]) +
                       "x" + std::to_string(kLayerWidths[k]));
    }
  }
  m.params = HeadParams::zeros();
  for (auto t : m.params.tensors()) r.f64s(t, "weights");
  r.expect_end();
  m.model_version = to_hex(sha256(bytes));
  return m;
}

void save_model(const HeadParams& params, const ModelMetadata& meta,
                const std::filesystem::path& path) {
  write_file(path, serialize_model(params, meta));
}

LoadedModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace screening
