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

#include "screening/embedding_cache.hpp"

#include <array>
#include <string_view>

#include "byte_io.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"

namespace screening {

namespace {
constexpr std::string_view kMagic = "SGEMB1";
}

std::vector<std::uint8_t> encode_embedding_cache(std::span<const CacheRecord> records) {
  detail::ByteWriter w;
  w.buffer().reserve(kMagic.size() + 8 + records.size() * kCacheRecordBytes);
  w.text(kMagic);
  w.u64(records.size());
  for (const auto& r : records) {
    w.bytes(r.source_digest);
    w.u8(static_cast<std::uint8_t>(r.label));
    w.f64s(r.embedding.values());
  }
  return std::move(w.buffer());
}

std::vector<CacheRecord> decode_embedding_cache(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.bytes(kMagic.size(), "cache magic");
  if (std::string_view(reinterpret_cast<const char*>(magic.data()), magic.size()) != kMagic) {
    throw FormatError("not an embedding cache (bad magic)", 0);
  }
  const std::uint64_t count = r.u64("record count");
  if (count > r.remaining() / kCacheRecordBytes) {
    throw FormatError("record count " + std::to_string(count) + " exceeds file size", r.offset());
  }
  std::vector<CacheRecord> out;
  out.reserve(count);
  std::vector<double> values(Embedding::kDim);
  for (std::uint64_t i = 0; i < count; ++i) {
    CacheRecord rec;
    const auto d = r.bytes(32, "source digest");
    std::copy(d.begin(), d.end(), rec.source_digest.begin());
    const std::uint64_t label_at = r.offset();
    const auto label = label_from_int(r.u8("label"));
    if (!label) throw FormatError("label byte must be 0 or 1", label_at);
    rec.label = *label;
    const std::uint64_t values_at = r.offset();
    r.f64s(values, "embedding");
    try {
      rec.embedding = Embedding(values);
    } catch (const Error&) {
      throw FormatError("non-finite embedding value in record " + std::to_string(i), values_at);
    }
    out.push_back(std::move(rec));
  }
  r.expect_end();
  return out;
}

void write_embedding_cache(const std::filesystem::path& path, std::span<const CacheRecord> records) {
  write_file(path, encode_embedding_cache(records));
}

std::vector<CacheRecord> read_embedding_cache(const std::filesystem::path& path) {
  return decode_embedding_cache(read_file(path));
}

}  // namespace screening
