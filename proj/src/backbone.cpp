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

#include "screening/backbone.hpp"

#include <Eigen/Core>

#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "onnx_graph.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"
#include "screening/random.hpp"

namespace screening {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() != kDim) {
    throw ShapeError("embedding must have 1280 values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InferenceError("embedding contains a non-finite value");
  }
}

class Backbone::Impl {
 public:
  virtual ~Impl() = default;
  virtual BackboneKind kind() const noexcept = 0;
  virtual Embedding embed(const TensorImage& tensor) const = 0;

  std::string version;
  Digest digest{};
};

namespace {

class MockBackbone final : public Backbone::Impl {
 public:
  static constexpr std::size_t kPool = 16;
  static constexpr std::size_t kGrid = TensorImage::kSize / kPool;  // 14
  static constexpr std::size_t kFeatures = kGrid * kGrid * TensorImage::kChannels;

  explicit MockBackbone(std::uint64_t seed)
      : weights_(Embedding::kDim, kFeatures), bias_(Embedding::kDim) {
    std::mt19937_64 rng(derive_seed({seed, 0x6d6f636bULL}));
    const double scale = 1.0 / std::sqrt(static_cast<double>(kFeatures));
    for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_.cols(); ++c) weights_(r, c) = scale * standard_normal(rng);
    }
    for (Eigen::Index r = 0; r < bias_.size(); ++r) bias_(r) = 0.5 * standard_normal(rng);
    version = "mock-" + std::to_string(seed);
    digest = sha256("screening mock backbone v1 seed=" + std::to_string(seed));
  }

  BackboneKind kind() const noexcept override { return BackboneKind::mock; }

  Embedding embed(const TensorImage& tensor) const override {
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kFeatures));
    const auto v = tensor.values();
    for (std::size_t y = 0; y < TensorImage::kSize; ++y) {
      const std::size_t gy = y / kPool;
      for (std::size_t x = 0; x < TensorImage::kSize; ++x) {
        const std::size_t gx = x / kPool;
        for (std::size_t c = 0; c < TensorImage::kChannels; ++c) {
          pooled(static_cast<Eigen::Index>((gy * kGrid + gx) * TensorImage::kChannels + c)) +=
              v[(y * TensorImage::kSize + x) * TensorImage::kChannels + c];
        }
      }
    }
    pooled /= static_cast<double>(kPool * kPool);
    const Eigen::VectorXd z = weights_ * pooled + bias_;
    std::vector<double> out(Embedding::kDim);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(z(static_cast<Eigen::Index>(i)));
    return Embedding(std::move(out));
  }

 private:
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> weights_;
  Eigen::VectorXd bias_;
};

enum class Layout { nhwc, nchw };

class OnnxBackbone final : public Backbone::Impl {
 public:
  OnnxBackbone(onnx_rt::Graph graph, Layout layout) : graph_(std::move(graph)), layout_(layout) {}

  BackboneKind kind() const noexcept override { return BackboneKind::onnx_model; }

  Embedding embed(const TensorImage& tensor) const override {
    return Embedding(run_raw(tensor));
  }

  // Raw output, before the 1280-length check.
  std::vector<double> run_raw(const TensorImage& tensor) const {
    constexpr auto s = static_cast<std::int64_t>(TensorImage::kSize);
    onnx_rt::Tensor in;
    const auto v = tensor.values();
    if (layout_ == Layout::nhwc) {
      in.shape = {1, s, s, 3};
      in.data.assign(v.begin(), v.end());
    } else {
      in.shape = {1, 3, s, s};
      in.data.resize(v.size());
      const std::size_t plane = TensorImage::kSize * TensorImage::kSize;
      for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t c = 0; c < 3; ++c) in.data[c * plane + p] = v[p * 3 + c];
      }
    }
    onnx_rt::Tensor out;
    try {
      out = graph_.run(std::move(in));
    } catch (const InferenceError&) {
      throw;
    } catch (const std::exception& e) {
      throw InferenceError(std::string("backbone evaluation failed: ") + e.what());
    }
    if (out.is_int) throw InferenceError("backbone produced an integer tensor");
    std::vector<double> values(out.data.begin(), out.data.end());
    for (double x : values) {
      if (!std::isfinite(x)) throw InferenceError("backbone produced a non-finite value");
    }
    return values;
  }

 private:
  onnx_rt::Graph graph_;
  Layout layout_;
};

std::string shape_string(const onnx_rt::DeclaredShape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += s[i] < 0 ? "?" : std::to_string(s[i]);
  }
  return out + "]";
}

Layout infer_layout(const onnx_rt::DeclaredShape& in) {
  if (in.empty()) return Layout::nhwc;
  auto spatial_ok = [](std::int64_t d) { return d < 0 || d == 224; };
  if (in.size() == 4) {
    if (in[3] == 3 && spatial_ok(in[1]) && spatial_ok(in[2])) return Layout::nhwc;
    if (in[1] == 3 && spatial_ok(in[2]) && spatial_ok(in[3])) return Layout::nchw;
  }
  throw BackboneShapeError("backbone input must be 224x224x3 (NHWC or NCHW), graph declares " +
                           shape_string(in));
}

}  // namespace

Backbone::Backbone(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

BackboneKind Backbone::kind() const noexcept { return impl_->kind(); }
const std::string& Backbone::model_version() const noexcept { return impl_->version; }
const Digest& Backbone::digest() const noexcept { return impl_->digest; }

Embedding Backbone::embed(const TensorImage& tensor) const { return impl_->embed(tensor); }

Backbone load_backbone(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  auto graph = onnx_rt::Graph::parse(bytes);
  const Layout layout = infer_layout(graph.input_shape());

  const auto& out = graph.output_shape();
  bool known = !out.empty();
  std::int64_t per_sample = 1;
  for (std::size_t i = out.size() >= 2 ? 1 : 0; i < out.size(); ++i) {
    if (out[i] < 0) known = false;
    per_sample *= out[i];
  }
  if (known && per_sample != static_cast<std::int64_t>(Embedding::kDim)) {
    throw BackboneShapeError("backbone output must have 1280 features, graph declares " +
                             shape_string(out));
  }

  auto impl = std::make_shared<OnnxBackbone>(std::move(graph), layout);
  // Probe once: validates that the graph evaluates and resolves symbolic
  // output dimensions.
  const auto probe = impl->run_raw(TensorImage());
  if (probe.size() != Embedding::kDim) {
    throw BackboneShapeError("backbone output must have 1280 features, graph produced " +
                             std::to_string(probe.size()));
  }
  impl->digest = sha256(bytes);
  impl->version = to_hex(impl->digest);
  return Backbone(std::move(impl));
}

Backbone make_mock_backbone(std::uint64_t seed) {
  return Backbone(std::make_shared<MockBackbone>(seed));
}

Backbone open_backbone(std::string_view spec) {
  constexpr std::string_view kMock = "mock:";
  if (spec.substr(0, kMock.size()) == kMock) {
    const auto digits = spec.substr(kMock.size());
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
      throw Error("mock backbone spec must be 'mock:<unsigned seed>'", ErrorCategory::usage);
    }
    return make_mock_backbone(seed);
  }
  return load_backbone(std::filesystem::path(std::string(spec)));
}

Embedding embed(const Backbone& backbone, const TensorImage& tensor) {
  return backbone.embed(tensor);
}

std::vector<Embedding> embed_batch(const Backbone& backbone, std::span<const TensorImage> tensors) {
  std::vector<Embedding> out;
  out.reserve(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    try {
      out.push_back(backbone.embed(tensors[i]));
    } catch (const std::exception& e) {
      throw InferenceError(e.what(), i);
    }
  }
  return out;
}

}  // namespace screening
