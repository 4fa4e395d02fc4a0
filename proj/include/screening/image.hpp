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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace screening {

/// Decoded 8-bit RGB image, row-major, channels interleaved.
class RasterImage {
 public:
  static constexpr std::size_t kChannels = 3;

  RasterImage() = default;
  /// Throws ShapeError unless height, width >= 1 and pixels.size() == height*width*3.
  RasterImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  static RasterImage filled(std::size_t height, std::size_t width, std::uint8_t value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return kChannels; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return pixels_[(y * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) noexcept {
    return pixels_[(y * width_ + x) * kChannels + c];
  }

  bool empty() const noexcept { return pixels_.empty(); }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Backbone input: 224x224x3 floats in [-1, 1], HWC order.
class TensorImage {
 public:
  static constexpr std::size_t kSize = 224;
  static constexpr std::size_t kChannels = 3;
  static constexpr std::size_t kLength = kSize * kSize * kChannels;

  TensorImage() : values_(kLength, 0.0f) {}
  /// Throws ShapeError on wrong length or values outside [-1, 1].
  explicit TensorImage(std::vector<float> values);

  std::span<const float> values() const noexcept { return values_; }
  float at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return values_[(y * kSize + x) * kChannels + c];
  }

  std::string_view normalization_id() const noexcept;

  friend bool operator==(const TensorImage&, const TensorImage&) = default;

 private:
  std::vector<float> values_;
};

/// Identifier of the resize + scaling applied by preprocess(). Stored in
/// model artifacts so training and inference agree.
inline constexpr std::string_view kNormalizationId = "rgb224-bilinear-halfpixel/v127.5-1";

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const noexcept { return lo <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Ranges for the random label-preserving transforms. There is deliberately
/// no flip option: handwriting orientation carries meaning.
struct AugmentSpec {
  Interval rotation_degrees{-5.0, 5.0};
  /// Shift magnitude as a fraction of the image side; direction is random.
  Interval translate_fraction{0.0, 0.05};
  Interval brightness_delta{-20.0, 20.0};
  Interval contrast_factor{0.9, 1.1};
  bool enabled = true;

  /// Throws Error when an interval is reversed or non-finite.
  void validate() const;

  static AugmentSpec identity();
};

/// Decodes a PNG or JPEG stream into RGB. Grayscale is replicated to three
/// channels and alpha is composited onto white. Throws DecodeError.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

/// Lossless PNG encoding of an RGB image.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

/// Baseline JPEG. With `grayscale` set, channel 0 is written as a single
/// luminance plane.
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 90,
                                      bool grayscale = false);

/// Bilinear resize (half-pixel centres, edge clamp).
RasterImage resize_bilinear(const RasterImage& img, std::size_t height, std::size_t width);

/// Bilinear resize to 224x224 followed by v -> v/127.5 - 1.
TensorImage preprocess(const RasterImage& img);

/// The random parameters drawn for one augment() call.
struct AugmentDraw {
  double rotation_degrees = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;  // pixels
  double brightness = 0.0;
  double contrast = 1.0;
};

AugmentDraw draw_augmentation(const AugmentSpec& spec, std::size_t height, std::size_t width,
                              std::uint64_t seed);

/// Applies exactly the given transform: photometric adjustment, then
/// rotation about the centre plus translation with white fill.
RasterImage apply_augmentation(const RasterImage& img, const AugmentDraw& draw);

/// One seeded random draw from `spec` applied to `img`. Same dimensions;
/// pure function of (img, spec, seed).
RasterImage augment(const RasterImage& img, const AugmentSpec& spec, std::uint64_t seed);

}  // namespace screening
