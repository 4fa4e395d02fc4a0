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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "screening/errors.hpp"
#include "screening/file_io.hpp"
#include "screening/image.hpp"

namespace screening {
namespace {

const std::string kData = SCREENING_TEST_DATA;

RasterImage random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(h * w * 3);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng() & 0xff);
  return RasterImage(h, w, std::move(px));
}

// Direct per-pixel evaluation of the half-pixel bilinear mapping.
double bilinear_oracle(const RasterImage& img, std::size_t oh, std::size_t ow, std::size_t y,
                       std::size_t x, std::size_t c) {
  auto coord = [](std::size_t o, std::size_t out, std::size_t in) {
    const double s = (o + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    return std::min(std::max(s, 0.0), static_cast<double>(in) - 1.0);
  };
  const double sy = coord(y, oh, img.height());
  const double sx = coord(x, ow, img.width());
  const auto y0 = static_cast<std::size_t>(sy);
  const auto x0 = static_cast<std::size_t>(sx);
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const double wy = sy - y0;
  const double wx = sx - x0;
  return img.at(y0, x0, c) * (1 - wy) * (1 - wx) + img.at(y0, x1, c) * (1 - wy) * wx +
         img.at(y1, x0, c) * wy * (1 - wx) + img.at(y1, x1, c) * wy * wx;
}

TEST(Decode, WhitePixelPng) {
  const RasterImage img = decode_image(read_file(kData + "/white_1x1.png"));
  EXPECT_EQ(img.height(), 1u);
  EXPECT_EQ(img.width(), 1u);
  EXPECT_EQ(std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()),
            (std::vector<std::uint8_t>{255, 255, 255}));
}

TEST(Decode, TruncatedJpegIsDecodeError) {
  auto bytes = read_file(kData + "/gray40_10x20.jpg");
  bytes.resize(10);
  EXPECT_THROW(decode_image(bytes), DecodeError);
}

TEST(Decode, TruncatedPngIsDecodeError) {
  auto bytes = read_file(kData + "/ramp_5x3.png");
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_image(bytes), DecodeError);
}

TEST(Decode, GrayscaleJpegReplicatedToThreeChannels) {
  const RasterImage img = decode_image(read_file(kData + "/gray40_10x20.jpg"));
  EXPECT_EQ(img.height(), 10u);
  EXPECT_EQ(img.width(), 20u);
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x < 20; ++x)
      for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(img.at(y, x, c), 40);
}

TEST(Decode, TransparentPixelsCompositeOntoWhite) {
  const RasterImage img = decode_image(read_file(kData + "/transparent_2x1.png"));
  for (auto v : img.pixels()) EXPECT_EQ(v, 255);
}

TEST(Decode, PngMatchesIndependentEncoder) {
  const RasterImage img = decode_image(read_file(kData + "/ramp_5x3.png"));
  ASSERT_EQ(img.height(), 3u);
  ASSERT_EQ(img.width(), 5u);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 5; ++x) {
      EXPECT_EQ(img.at(y, x, 0), x * 50);
      EXPECT_EQ(img.at(y, x, 1), y * 100);
      EXPECT_EQ(img.at(y, x, 2), (x + y) * 20);
    }
  }
}

TEST(Decode, ColorJpegDecodesNearSource) {
  const RasterImage img = decode_image(read_file(kData + "/ramp_5x3.jpg"));
  ASSERT_EQ(img.height(), 3u);
  ASSERT_EQ(img.width(), 5u);
  // Chroma subsampling on a 5x3 image is lossy; only check the luminance trend.
  auto luma = [&](std::size_t y, std::size_t x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
  };
  EXPECT_NEAR(luma(0, 0), 0.0, 20.0);
  EXPECT_NEAR(luma(2, 4), 0.299 * 200 + 0.587 * 200 + 0.114 * 120, 20.0);
}

TEST(Decode, RejectsOtherFormats) {
  const std::string gif = "GIF89a\x01\x00\x01\x00";
  EXPECT_THROW(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(gif.data()), gif.size())),
               DecodeError);
  EXPECT_THROW(decode_image({}), DecodeError);
}

TEST(Decode, PngRoundTripIsIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RasterImage img = random_image(1 + seed % 7, 1 + (seed * 5) % 11, seed);
    EXPECT_EQ(decode_image(encode_png(img)), img) << "seed " << seed;
  }
}

TEST(Decode, OwnGrayscaleJpegKeepsConstantValue) {
  const RasterImage src = RasterImage::filled(16, 24, 40);
  const RasterImage img = decode_image(encode_jpeg(src, 90, true));
  for (auto v : img.pixels()) ASSERT_EQ(v, 40);
}

TEST(Raster, RejectsBadShapes) {
  EXPECT_THROW(RasterImage(0, 3, {}), ShapeError);
  EXPECT_THROW(RasterImage(2, 2, std::vector<std::uint8_t>(11)), ShapeError);
}

TEST(Preprocess, ScaleEndpoints) {
  for (std::uint8_t value : {0, 255}) {
    const TensorImage t = preprocess(RasterImage::filled(37, 91, value));
    const float expected = value == 255 ? 1.0f : -1.0f;
    for (float v : t.values()) ASSERT_EQ(v, expected);
  }
}

TEST(Preprocess, MidGrey) {
  const TensorImage t = preprocess(RasterImage::filled(300, 200, 128));
  for (float v : t.values()) ASSERT_NEAR(v, 128.0 / 127.5 - 1.0, 1e-7);
  EXPECT_NEAR(t.values()[0], 0.0039216, 1e-7);
}

TEST(Preprocess, MatchesBilinearOracle) {
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{37, 53}, {224, 224}, {500, 310}, {1, 1}}) {
    const RasterImage img = random_image(h, w, h * 1000 + w);
    const TensorImage t = preprocess(img);
    ASSERT_EQ(t.values().size(), 224u * 224u * 3u);
    for (std::size_t y = 0; y < 224; y += 7) {
      for (std::size_t x = 0; x < 224; x += 5) {
        for (std::size_t c = 0; c < 3; ++c) {
          const double expected = bilinear_oracle(img, 224, 224, y, x, c) / 127.5 - 1.0;
          ASSERT_NEAR(t.at(y, x, c), expected, 1e-6) << h << "x" << w << " at " << y << "," << x;
        }
      }
    }
  }
}

TEST(Preprocess, IdentitySizeKeepsPixels) {
  const RasterImage img = random_image(224, 224, 3);
  const TensorImage t = preprocess(img);
  for (std::size_t i = 0; i < img.pixels().size(); ++i)
    ASSERT_FLOAT_EQ(t.values()[i], static_cast<float>(img.pixels()[i] / 127.5 - 1.0));
}

TEST(Preprocess, OutputShapeAndRangeProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t h = 1 + rng() % 400;
    const std::size_t w = 1 + rng() % 400;
    const TensorImage t = preprocess(random_image(h, w, rng()));
    ASSERT_EQ(t.values().size(), TensorImage::kLength);
    for (float v : t.values()) ASSERT_TRUE(v >= -1.0f && v <= 1.0f);
  }
}

TEST(Resize, HalfPixelUpsampleByHand) {
  const RasterImage row(1, 2, {0, 0, 0, 100, 100, 100});
  const RasterImage out = resize_bilinear(row, 1, 4);
  EXPECT_EQ(out.at(0, 0, 0), 0);
  EXPECT_EQ(out.at(0, 1, 0), 25);
  EXPECT_EQ(out.at(0, 2, 0), 75);
  EXPECT_EQ(out.at(0, 3, 0), 100);
}

TEST(Augment, IdentitySpecIsByteExact) {
  const RasterImage img = random_image(40, 60, 5);
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) EXPECT_EQ(augment(img, AugmentSpec::identity(), seed), img);
}

TEST(Augment, DisabledSpecIsIdentity) {
  const RasterImage img = random_image(20, 20, 6);
  AugmentSpec spec;
  spec.enabled = false;
  EXPECT_EQ(augment(img, spec, 4), img);
}

TEST(Augment, SameSeedSameOutput) {
  const RasterImage img = random_image(64, 48, 7);
  const AugmentSpec spec;
  EXPECT_EQ(augment(img, spec, 1234), augment(img, spec, 1234));
  EXPECT_NE(augment(img, spec, 1234), augment(img, spec, 1235));
}

TEST(Augment, BrightnessShift) {
  AugmentSpec spec = AugmentSpec::identity();
  spec.brightness_delta = {10.0, 10.0};
  const RasterImage out = augment(RasterImage::filled(30, 30, 100), spec, 77);
  for (auto v : out.pixels()) ASSERT_EQ(v, 110);
}

TEST(Augment, ContrastAboutMidpoint) {
  AugmentSpec spec = AugmentSpec::identity();
  spec.contrast_factor = {2.0, 2.0};
  const RasterImage out = augment(RasterImage(1, 2, {100, 100, 100, 200, 200, 200}), spec, 0);
  EXPECT_EQ(out.at(0, 0, 0), 73);   // 2 * (100 - 127.5) + 127.5 = 72.5 -> 73
  EXPECT_EQ(out.at(0, 1, 0), 255);  // 272.5 clamps
}

TEST(Augment, WholePixelTranslationShiftsAndFillsWhite) {
  const RasterImage img = random_image(10, 10, 8);
  AugmentDraw d;
  d.shift_x = 3.0;
  const RasterImage out = apply_augmentation(img, d);
  for (std::size_t y = 0; y < 10; ++y) {
    for (std::size_t x = 0; x < 10; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::uint8_t expected = x < 3 ? 255 : img.at(y, x - 3, c);
        ASSERT_EQ(out.at(y, x, c), expected);
      }
    }
  }
}

TEST(Augment, QuarterTurnRotatesAboutCentre) {
  const RasterImage img = random_image(9, 9, 9);
  AugmentDraw d;
  d.rotation_degrees = 90.0;
  const RasterImage out = apply_augmentation(img, d);
  // Output (y, x) samples the source at (x, 8 - y) for a square 9x9 image.
  for (std::size_t y = 0; y < 9; ++y)
    for (std::size_t x = 0; x < 9; ++x)
      for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(out.at(y, x, c), img.at(8 - x, y, c)) << y << "," << x;
}

TEST(Augment, DrawsStayInsideIntervals) {
  const AugmentSpec spec;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const AugmentDraw d = draw_augmentation(spec, 200, 100, seed);
    ASSERT_GE(d.rotation_degrees, -5.0);
    ASSERT_LE(d.rotation_degrees, 5.0);
    ASSERT_LE(std::abs(d.shift_x), 0.05 * 100);
    ASSERT_LE(std::abs(d.shift_y), 0.05 * 200);
    ASSERT_GE(d.brightness, -20.0);
    ASSERT_LE(d.brightness, 20.0);
    ASSERT_GE(d.contrast, 0.9);
    ASSERT_LE(d.contrast, 1.1);
  }
}

TEST(Augment, KeepsDimensionsAndRangeProperty) {
  std::mt19937_64 rng(12);
  AugmentSpec wild;
  wild.rotation_degrees = {-180.0, 180.0};
  wild.translate_fraction = {0.0, 0.5};
  wild.brightness_delta = {-300.0, 300.0};
  wild.contrast_factor = {0.0, 4.0};
  for (int trial = 0; trial < 50; ++trial) {
    const RasterImage img = random_image(1 + rng() % 50, 1 + rng() % 50, rng());
    const RasterImage out = augment(img, wild, rng());
    ASSERT_EQ(out.height(), img.height());
    ASSERT_EQ(out.width(), img.width());
  }
}

TEST(Augment, RejectsReversedInterval) {
  AugmentSpec spec;
  spec.rotation_degrees = {5.0, -5.0};
  EXPECT_THROW(augment(RasterImage::filled(2, 2, 0), spec, 0), Error);
}

}  // namespace
}  // namespace screening
