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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "json.hpp"
#include "screening/embedding_cache.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"
#include "screening/model_io.hpp"
#include "screening/screening.hpp"

namespace fs = std::filesystem;

namespace screening {
namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("screening-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

Embedding random_embedding(std::mt19937_64& rng) {
  std::vector<double> v(Embedding::kDim);
  for (double& x : v) x = std::ldexp(static_cast<double>(rng() >> 11), -53) * 4.0 - 2.0;
  return Embedding(std::move(v));
}

std::uint64_t read_u64(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
  return v;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(read_u64(std::vector<std::uint8_t>{b[at], b[at + 1], b[at + 2], b[at + 3], 0, 0, 0, 0}, 0));
}

std::vector<CacheRecord> sample_records(std::size_t n) {
  std::mt19937_64 rng(5);
  std::vector<CacheRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    CacheRecord r;
    r.source_digest = sha256("image " + std::to_string(i));
    r.label = i % 3 == 0 ? Label::positive : Label::negative;
    r.embedding = random_embedding(rng);
    out.push_back(r);
  }
  return out;
}

TEST(Digest, KnownVectorAndHex) {
  EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(digest_from_hex(to_hex(sha256("x"))), sha256("x"));
  EXPECT_THROW(digest_from_hex("zz"), FormatError);
}

TEST(Cache, ExactLayout) {
  const auto records = sample_records(2);
  const auto bytes = encode_embedding_cache(records);
  ASSERT_EQ(bytes.size(), 6 + 8 + 2 * (32 + 1 + 1280 * 8));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 6), "SGEMB1");
  EXPECT_EQ(read_u64(bytes, 6), 2u);
  EXPECT_TRUE(std::equal(records[0].source_digest.begin(), records[0].source_digest.end(), bytes.begin() + 14));
  EXPECT_EQ(bytes[14 + 32], 1);  // record 0 is positive
  EXPECT_EQ(read_u64(bytes, 14 + 33), std::bit_cast<std::uint64_t>(records[0].embedding[0]));
  const std::size_t second = 14 + kCacheRecordBytes;
  EXPECT_EQ(bytes[second + 32], 0);
  EXPECT_EQ(read_u64(bytes, second + 33 + 8 * 1279), std::bit_cast<std::uint64_t>(records[1].embedding[1279]));
}

TEST(Cache, RoundTrip) {
  const auto records = sample_records(7);
  EXPECT_EQ(decode_embedding_cache(encode_embedding_cache(records)), records);
  EXPECT_TRUE(decode_embedding_cache(encode_embedding_cache({})).empty());
  TempDir dir;
  write_embedding_cache(dir / "c.bin", records);
  EXPECT_EQ(read_embedding_cache(dir / "c.bin"), records);
  EXPECT_THROW(read_embedding_cache(dir / "missing.bin"), FileNotFound);
}

TEST(Cache, CorruptionsAreFormatErrors) {
  const auto good = encode_embedding_cache(sample_records(3));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_embedding_cache(bad_magic), FormatError);

  auto truncated = good;
  truncated.resize(good.size() - 100);
  try {
    decode_embedding_cache(truncated);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }

  auto bad_label = good;
  bad_label[14 + 32] = 2;
  try {
    decode_embedding_cache(bad_label);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 14u + 32u);
  }

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(decode_embedding_cache(trailing), FormatError);

  auto nan = good;
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(std::nan(""));
  for (int i = 0; i < 8; ++i) nan[14 + 33 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bits >> (8 * i));
  EXPECT_THROW(decode_embedding_cache(nan), FormatError);
}

ModelMetadata sample_meta() {
  ModelMetadata m;
  m.backbone_digest = sha256("backbone");
  m.dropout_rate = 0.5;
  m.threshold = 0.5;
  return m;
}

TEST(Model, RoundTripBitExact) {
  const HeadParams p = init_params(21);
  const ModelMetadata meta = sample_meta();
  const auto bytes = serialize_model(p, meta);
  const LoadedModel m = deserialize_model(bytes);
  EXPECT_EQ(m.metadata, meta);
  const auto a = p.tensors();
  const auto b = m.params.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    ASSERT_EQ(a[t].size(), b[t].size());
    ASSERT_EQ(std::memcmp(a[t].data(), b[t].data(), a[t].size() * sizeof(double)), 0);
  }
  EXPECT_EQ(m.model_version, to_hex(sha256(bytes)));
  EXPECT_EQ(param_count(m.params).total, 1425601u);
}

TEST(Model, ExactLayout) {
  HeadParams p = HeadParams::zeros();
  p.layers[0].weights(0, 1) = 1.5;
  p.layers[3].bias(0) = -2.25;
  const ModelMetadata meta = sample_meta();
  const auto bytes = serialize_model(p, meta);
  const std::size_t header = 97 + meta.normalization_id.size();
  EXPECT_EQ(model_header_size(meta), header);
  ASSERT_EQ(bytes.size(), header + 1425601u * 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "SGHD1");
  EXPECT_EQ(read_u32(bytes, 5), 1u);
  EXPECT_TRUE(std::equal(meta.backbone_digest.begin(), meta.backbone_digest.end(), bytes.begin() + 9));
  EXPECT_EQ(read_u32(bytes, 41), meta.normalization_id.size());
  std::size_t at = 45 + meta.normalization_id.size();
  EXPECT_EQ(std::string(bytes.begin() + 45, bytes.begin() + static_cast<long>(at)), meta.normalization_id);
  EXPECT_EQ(read_u64(bytes, at), std::bit_cast<std::uint64_t>(0.5));
  EXPECT_EQ(read_u64(bytes, at + 8), std::bit_cast<std::uint64_t>(0.5));
  EXPECT_EQ(read_u32(bytes, at + 16), 4u);
  const std::uint32_t dims[] = {800, 1280, 400, 800, 200, 400, 1, 200};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(read_u32(bytes, at + 20 + 4 * i), dims[i]);
  EXPECT_EQ(read_u64(bytes, header + 8), std::bit_cast<std::uint64_t>(1.5));  // W1[0][1]
  EXPECT_EQ(read_u64(bytes, bytes.size() - 8), std::bit_cast<std::uint64_t>(-2.25));  // b4
}

TEST(Model, SaveLoadFile) {
  TempDir dir;
  const HeadParams p = init_params(2);
  save_model(p, sample_meta(), dir / "m.sghd");
  const LoadedModel m = load_model(dir / "m.sghd");
  EXPECT_EQ(m.params, p);
  EXPECT_EQ(fs::file_size(dir / "m.sghd"), model_header_size(sample_meta()) + 1425601u * 8u);
  EXPECT_FALSE(fs::exists(dir / "m.sghd.tmp"));
}

TEST(Model, UnwritableLocationIsIoError) {
  TempDir dir;
  { std::ofstream(dir / "plain-file") << "x"; }
  EXPECT_THROW(save_model(init_params(0), sample_meta(), dir / "plain-file" / "m.sghd"), IoError);
  EXPECT_THROW(load_model(dir / "missing.sghd"), IoError);
}

TEST(Model, DistinctErrorsForCorruption) {
  const auto good = serialize_model(init_params(3), sample_meta());

  auto magic = good;
  std::memcpy(magic.data(), "XXXX", 4);
  EXPECT_THROW(deserialize_model(magic), FormatError);

  auto truncated = good;
  truncated.resize(good.size() / 2);
  try {
    deserialize_model(truncated);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), truncated.size());
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }

  auto version = good;
  version[5] = 2;
  EXPECT_THROW(deserialize_model(version), VersionError);

  auto dims = good;
  const std::size_t table = model_header_size(sample_meta()) - 32;
  dims[table] = 0x21;  // layer 1 output width 800 -> 801
  dims[table + 1] = 0x03;
  ASSERT_EQ(read_u32(dims, table), 801u);
  EXPECT_THROW(deserialize_model(dims), ShapeError);

  auto layers = good;
  layers[table - 4] = 3;
  EXPECT_THROW(deserialize_model(layers), ShapeError);

  auto trailing = good;
  trailing.push_back(7);
  EXPECT_THROW(deserialize_model(trailing), FormatError);
}

LoadedModel model_with_output(double probability, const Backbone& backbone) {
  LoadedModel m;
  m.params = HeadParams::zeros();
  m.params.layers[3].bias(0) = std::log(probability / (1.0 - probability));
  m.metadata.backbone_digest = backbone.digest();
  m.model_version = "test";
  return m;
}

std::vector<std::uint8_t> page_png() {
  RasterImage img = RasterImage::filled(60, 40, 230);
  for (std::size_t y = 10; y < 20; ++y)
    for (std::size_t x = 5; x < 35; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = 30;
  return encode_png(img);
}

TEST(Screening, ForcedProbabilityIsPositive) {
  const Backbone b = make_mock_backbone(0);
  const auto r = run_screening(page_png(), b, model_with_output(0.7, b));
  EXPECT_NEAR(r.probability, 0.7, 1e-12);
  EXPECT_EQ(r.label, Label::positive);
  EXPECT_EQ(r.threshold, 0.5);
  EXPECT_EQ(r.model_version, "test");
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_GE(r.timing_ms, 0.0);
}

TEST(Screening, ProbabilityAtThresholdIsPositive) {
  const Backbone b = make_mock_backbone(0);
  LoadedModel m = model_with_output(0.5, b);
  EXPECT_EQ(run_screening(page_png(), b, m).label, Label::positive);
  m.metadata.threshold = 0.7;
  LoadedModel below = model_with_output(0.6, b);
  below.metadata.threshold = 0.7;
  EXPECT_EQ(run_screening(page_png(), b, below).label, Label::negative);
}

TEST(Screening, CorruptImageIsDecodeError) {
  const Backbone b = make_mock_backbone(0);
  auto bytes = page_png();
  bytes.resize(20);
  EXPECT_THROW(run_screening(bytes, b, model_with_output(0.7, b)), DecodeError);
}

TEST(Screening, EqualsManualComposition) {
  const Backbone b = make_mock_backbone(4);
  LoadedModel m;
  m.params = init_params(8);
  m.metadata.backbone_digest = b.digest();
  const auto bytes = page_png();
  const double manual =
      forward(m.params, embed(b, preprocess(decode_image(bytes))), DropoutSpec::inference()).probability;
  EXPECT_EQ(run_screening(bytes, b, m).probability, manual);
}

TEST(Screening, BackboneMismatchWarnsOrThrows) {
  const Backbone b = make_mock_backbone(0);
  const LoadedModel m = model_with_output(0.7, make_mock_backbone(1));
  const auto r = run_screening(page_png(), b, m);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_THROW(run_screening(page_png(), b, m, {.strict_backbone = true}), BackboneMismatch);
}

TEST(Screening, JsonFields) {
  const Backbone b = make_mock_backbone(0);
  const auto j = nlohmann::json::parse(to_json(run_screening(page_png(), b, model_with_output(0.25, b))));
  EXPECT_NEAR(j["probability"].get<double>(), 0.25, 1e-12);
  EXPECT_EQ(j["label"], "negative");
  EXPECT_EQ(j["threshold"], 0.5);
  EXPECT_EQ(j["model_version"], "test");
  EXPECT_TRUE(j["timing_ms"].is_number());
  EXPECT_FALSE(j.contains("warnings"));
}

}  // namespace
}  // namespace screening
