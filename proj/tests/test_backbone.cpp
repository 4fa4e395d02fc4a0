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

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "screening/backbone.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"
#include "screening/random.hpp"

namespace screening {
namespace {

const std::string kData = SCREENING_TEST_DATA;

// The fixture script's deterministic input pattern, in HWC order.
TensorImage pattern_tensor(int variant) {
  std::vector<float> v(TensorImage::kLength);
  for (int h = 0; h < 224; ++h)
    for (int w = 0; w < 224; ++w)
      for (int c = 0; c < 3; ++c) {
        const int q = (h * 7 + w * 13 + c * 29 + variant * 101) % 255;
        v[(h * 224 + w) * 3 + c] = static_cast<float>(q / 127.5 - 1.0);
      }
  return TensorImage(std::move(v));
}

std::vector<float> read_f32(const std::string& path) {
  const auto bytes = read_file(path);
  std::vector<float> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), out.size() * 4);
  return out;
}

TensorImage random_tensor(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> v(TensorImage::kLength);
  for (float& x : v) x = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
  return TensorImage(std::move(v));
}

TEST(Embedding, RejectsWrongLengthAndNonFinite) {
  EXPECT_THROW(Embedding(std::vector<double>(1279)), ShapeError);
  std::vector<double> v(1280, 0.0);
  v[7] = std::nan("");
  EXPECT_THROW(Embedding(std::move(v)), InferenceError);
}

TEST(TensorImageType, RejectsOutOfRange) {
  std::vector<float> v(TensorImage::kLength, 0.0f);
  v[3] = 1.5f;
  EXPECT_THROW(TensorImage(std::move(v)), ShapeError);
  EXPECT_THROW(TensorImage(std::vector<float>(10)), ShapeError);
}

TEST(MockBackbone, DeterministicPerSeed) {
  const TensorImage t = random_tensor(1);
  EXPECT_EQ(embed(make_mock_backbone(5), t), embed(make_mock_backbone(5), t));
  const Backbone b = make_mock_backbone(5);
  EXPECT_EQ(embed(b, t), embed(b, t));
  EXPECT_EQ(b.kind(), BackboneKind::mock);
  EXPECT_EQ(b.model_version(), "mock-5");
  EXPECT_EQ(b.output_dim(), 1280u);
}

TEST(MockBackbone, SeedsGiveDifferentProjections) {
  const TensorImage t = random_tensor(2);
  const Embedding a = embed(make_mock_backbone(0), t);
  const Embedding b = embed(make_mock_backbone(1), t);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < 1280; ++i) differing += a[i] != b[i];
  EXPECT_GT(differing, 1200u);
  EXPECT_NE(make_mock_backbone(0).digest(), make_mock_backbone(1).digest());
}

TEST(MockBackbone, ZeroTensorGivesSquashedBias) {
  // With zero input only the bias survives the projection: tanh(0.5 * N(0,1)).
  std::mt19937_64 rng(derive_seed({3, 0x6d6f636bULL}));
  for (std::size_t i = 0; i < 1280 * 588; ++i) standard_normal(rng);
  const Embedding e = embed(make_mock_backbone(3), TensorImage());
  for (std::size_t i = 0; i < 1280; ++i) ASSERT_DOUBLE_EQ(e[i], std::tanh(0.5 * standard_normal(rng)));
}

TEST(MockBackbone, OnePixelChangesEmbedding) {
  std::vector<float> v(TensorImage::kLength, 0.0f);
  const TensorImage a(v);
  v[(100 * 224 + 50) * 3 + 1] = 1.0f;
  const TensorImage b(std::move(v));
  const Backbone bb = make_mock_backbone(0);
  EXPECT_NE(embed(bb, a), embed(bb, b));
}

TEST(MockBackbone, AlwaysFiniteAndBounded) {
  const Backbone b = make_mock_backbone(9);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Embedding e = embed(b, random_tensor(s));
    ASSERT_EQ(e.size(), 1280u);
    for (double x : e.values()) ASSERT_TRUE(std::isfinite(x) && std::abs(x) <= 1.0);
  }
}

TEST(OpenBackbone, MockSpec) {
  EXPECT_EQ(open_backbone("mock:42").model_version(), "mock-42");
  EXPECT_THROW(open_backbone("mock:x"), Error);
  EXPECT_THROW(open_backbone("mock:"), Error);
}

TEST(EmbedBatch, EmptyBatch) {
  EXPECT_TRUE(embed_batch(make_mock_backbone(0), {}).empty());
}

TEST(EmbedBatch, MatchesSequentialCalls) {
  const Backbone b = make_mock_backbone(4);
  std::vector<TensorImage> ts;
  for (std::uint64_t s = 0; s < 3; ++s) ts.push_back(random_tensor(100 + s));
  const auto batch = embed_batch(b, ts);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(batch[i], embed(b, ts[i]));
}

TEST(EmbedBatch, FiveHundredPreservesOrder) {
  const Backbone b = make_mock_backbone(8);
  std::vector<TensorImage> ts;
  for (std::uint64_t s = 0; s < 497; ++s) {
    std::vector<float> v(TensorImage::kLength, 0.0f);
    v[s * 3] = 1.0f;  // distinct position per element
    ts.emplace_back(std::move(v));
  }
  const auto batch = embed_batch(b, ts);
  ASSERT_EQ(batch.size(), 497u);
  for (std::size_t i = 0; i < ts.size(); ++i) ASSERT_EQ(batch[i], embed(b, ts[i])) << i;
}

TEST(OnnxBackbone, MobileNetMatchesReferenceRuntime) {
  const Backbone b = load_backbone(kData + "/mobilenetv2_w035_nhwc.onnx");
  EXPECT_EQ(b.kind(), BackboneKind::onnx_model);
  EXPECT_EQ(b.output_dim(), 1280u);
  EXPECT_EQ(b.model_version(), to_hex(sha256(read_file(kData + "/mobilenetv2_w035_nhwc.onnx"))));
  for (int variant : {0, 1}) {
    const auto expected = read_f32(kData + "/mobilenetv2_w035_expected_" + std::to_string(variant) + ".f32");
    ASSERT_EQ(expected.size(), 1280u);
    const Embedding e = embed(b, pattern_tensor(variant));
    double max_err = 0.0;
    for (std::size_t i = 0; i < 1280; ++i) {
      const double tol = 1e-4 * std::max(1.0, std::abs(static_cast<double>(expected[i])));
      max_err = std::max(max_err, std::abs(e[i] - expected[i]));
      ASSERT_NEAR(e[i], expected[i], tol) << "variant " << variant << " index " << i;
    }
    RecordProperty("max_abs_error_" + std::to_string(variant), std::to_string(max_err));
  }
}

TEST(OnnxBackbone, RepeatedCallsAgree) {
  const Backbone b = load_backbone(kData + "/mobilenetv2_w035_nhwc.onnx");
  const TensorImage t = pattern_tensor(1);
  const Embedding a = embed(b, t);
  const Embedding c = embed(b, t);
  for (std::size_t i = 0; i < 1280; ++i) ASSERT_NEAR(a[i], c[i], 1e-5);
}

TEST(OnnxBackbone, NchwGraphMatchesReferenceRuntime) {
  const Backbone b = load_backbone(kData + "/tiny_nchw.onnx");
  const auto expected = read_f32(kData + "/tiny_nchw_expected.f32");
  const Embedding e = embed(b, pattern_tensor(0));
  for (std::size_t i = 0; i < 1280; ++i) ASSERT_NEAR(e[i], expected[i], 1e-5) << i;
}

TEST(OnnxBackbone, ClassifierOutputRejected) {
  EXPECT_THROW(load_backbone(kData + "/classifier_1000.onnx"), BackboneShapeError);
  EXPECT_THROW(load_backbone(kData + "/symbolic_1000.onnx"), BackboneShapeError);
}

TEST(OnnxBackbone, MissingFile) {
  EXPECT_THROW(load_backbone(kData + "/does_not_exist.onnx"), FileNotFound);
  EXPECT_THROW(open_backbone(kData + "/does_not_exist.onnx"), FileNotFound);
}

TEST(OnnxBackbone, GarbageFileIsFormatError) {
  EXPECT_THROW(load_backbone(kData + "/white_1x1.png"), FormatError);
}

TEST(OnnxBackbone, UnsupportedOperator) {
  EXPECT_THROW(load_backbone(kData + "/softmax_head.onnx"), InferenceError);
}

TEST(OnnxBackbone, BatchFailureCarriesIndex) {
  const Backbone b = load_backbone(kData + "/sqrt_head.onnx");
  std::vector<TensorImage> ts(3);
  ts[2] = TensorImage(std::vector<float>(TensorImage::kLength, -1.0f));
  try {
    embed_batch(b, ts);
    FAIL() << "expected InferenceError";
  } catch (const InferenceError& e) {
    EXPECT_EQ(e.index(), 2u);
    EXPECT_NE(std::string(e.what()).find("element 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace screening
