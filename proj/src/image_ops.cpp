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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "screening/errors.hpp"
#include "screening/image.hpp"
#include "screening/random.hpp"

namespace screening {

RasterImage::RasterImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height_ == 0 || width_ == 0) throw ShapeError("image dimensions must be at least 1x1");
  if (pixels_.size() != height_ * width_ * kChannels) {
    throw ShapeError("pixel buffer holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                     std::to_string(height_ * width_ * kChannels));
  }
}

RasterImage RasterImage::filled(std::size_t height, std::size_t width, std::uint8_t value) {
  return RasterImage(height, width, std::vector<std::uint8_t>(height * width * kChannels, value));
}

TensorImage::TensorImage(std::vector<float> values) : values_(std::move(values)) {
  if (values_.size() != kLength) {
    throw ShapeError("tensor image must hold 224x224x3 values, got " +
                     std::to_string(values_.size()));
  }
  for (float v : values_) {
    if (!(v >= -1.0f && v <= 1.0f)) throw ShapeError("tensor image value outside [-1, 1]");
  }
}

std::string_view TensorImage::normalization_id() const noexcept { return kNormalizationId; }

void AugmentSpec::validate() const {
  auto check = [](const Interval& iv, const char* name) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !iv.valid()) {
      throw Error(std::string("augmentation interval '") + name + "' must satisfy lo <= hi");
    }
  };
  check(rotation_degrees, "rotation_degrees");
  check(translate_fraction, "translate_fraction");
  check(brightness_delta, "brightness_delta");
  check(contrast_factor, "contrast_factor");
  if (translate_fraction.lo < 0.0) throw Error("translate_fraction must be non-negative");
  if (contrast_factor.lo < 0.0) throw Error("contrast_factor must be non-negative");
}

AugmentSpec AugmentSpec::identity() {
  AugmentSpec s;
  s.rotation_degrees = {0.0, 0.0};
  s.translate_fraction = {0.0, 0.0};
  s.brightness_delta = {0.0, 0.0};
  s.contrast_factor = {1.0, 1.0};
  return s;
}

namespace {

// Bilinear resample into doubles, half-pixel centre convention.
std::vector<double> resample(const RasterImage& img, std::size_t out_h, std::size_t out_w) {
  const std::size_t in_h = img.height();
  const std::size_t in_w = img.width();
  const double scale_y = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double scale_x = static_cast<double>(in_w) / static_cast<double>(out_w);

  struct Tap {
    std::size_t i0, i1;
    double f;
  };
  auto taps = [](std::size_t out, std::size_t in, double scale) {
    std::vector<Tap> t(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = (static_cast<double>(o) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      t[o] = {i0, std::min(i0 + 1, in - 1), s - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(out_h, in_h, scale_y);
  const auto tx = taps(out_w, in_w, scale_x);

  std::vector<double> out(out_h * out_w * 3);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1.0 - b.f) * img.at(a.i0, b.i0, c) + b.f * img.at(a.i0, b.i1, c);
        const double bot = (1.0 - b.f) * img.at(a.i1, b.i0, c) + b.f * img.at(a.i1, b.i1, c);
        out[(y * out_w + x) * 3 + c] = (1.0 - a.f) * top + a.f * bot;
      }
    }
  }
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

double draw(const Interval& iv, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  return iv.lo + (iv.hi - iv.lo) * u;
}

}  // namespace

RasterImage resize_bilinear(const RasterImage& img, std::size_t height, std::size_t width) {
  if (img.empty()) throw ShapeError("cannot resize an empty image");
  if (height == 0 || width == 0) throw ShapeError("resize target must be at least 1x1");
  const auto values = resample(img, height, width);
  std::vector<std::uint8_t> px(values.size());
  std::transform(values.begin(), values.end(), px.begin(), to_byte);
  return RasterImage(height, width, std::move(px));
}

TensorImage preprocess(const RasterImage& img) {
  if (img.empty()) throw ShapeError("cannot preprocess an empty image");
  const auto values = resample(img, TensorImage::kSize, TensorImage::kSize);
  std::vector<float> t(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i] / 127.5 - 1.0;
    t[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return TensorImage(std::move(t));
}

AugmentDraw draw_augmentation(const AugmentSpec& spec, std::size_t height, std::size_t width,
                              std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  AugmentDraw d;
  d.rotation_degrees = draw(spec.rotation_degrees, rng);
  const double fx = draw(spec.translate_fraction, rng);
  const double fy = draw(spec.translate_fraction, rng);
  const double sx = (rng() >> 63) ? -1.0 : 1.0;
  const double sy = (rng() >> 63) ? -1.0 : 1.0;
  d.shift_x = sx * fx * static_cast<double>(width);
  d.shift_y = sy * fy * static_cast<double>(height);
  d.brightness = draw(spec.brightness_delta, rng);
  d.contrast = draw(spec.contrast_factor, rng);
  return d;
}

RasterImage apply_augmentation(const RasterImage& img, const AugmentDraw& d) {
  if (img.empty()) throw ShapeError("cannot augment an empty image");
  const std::size_t h = img.height();
  const std::size_t w = img.width();

  std::vector<double> adjusted(img.pixels().size());
  {
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
      adjusted[i] = d.contrast * (static_cast<double>(px[i]) - 127.5) + 127.5 + d.brightness;
    }
  }

  const double theta = d.rotation_degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;

  auto fetch = [&](long long y, long long x, std::size_t c) -> double {
    if (y < 0 || x < 0 || y >= static_cast<long long>(h) || x >= static_cast<long long>(w)) {
      return 255.0;
    }
    return adjusted[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3 + c];
  };

  std::vector<std::uint8_t> out(adjusted.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Inverse map: output pixel -> source location.
      const double ox = static_cast<double>(x) - cx - d.shift_x;
      const double oy = static_cast<double>(y) - cy - d.shift_y;
      const double sx = cos_t * ox + sin_t * oy + cx;
      const double sy = -sin_t * ox + cos_t * oy + cy;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double ax = sx - fx0;
      const double ay = sy - fy0;
      const auto x0 = static_cast<long long>(fx0);
      const auto y0 = static_cast<long long>(fy0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1.0 - ax) * fetch(y0, x0, c) + ax * fetch(y0, x0 + 1, c);
        const double bot = (1.0 - ax) * fetch(y0 + 1, x0, c) + ax * fetch(y0 + 1, x0 + 1, c);
        out[(y * w + x) * 3 + c] = to_byte((1.0 - ay) * top + ay * bot);
      }
    }
  }
  return RasterImage(h, w, std::move(out));
}

RasterImage augment(const RasterImage& img, const AugmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (!spec.enabled) return img;
  return apply_augmentation(img, draw_augmentation(spec, img.height(), img.width(), seed));
}

}  // namespace screening
