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

#include "screening/head.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <random>
#include <string>

#include "screening/errors.hpp"
#include "screening/random.hpp"

namespace screening {

namespace {

constexpr double kProbabilityClamp = 1e-12;

Eigen::Index dim(std::size_t k) { return static_cast<Eigen::Index>(kLayerWidths[k]); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Keeps the reported probability inside the open interval.
double open_unit(double p) {
  if (p >= 1.0) return std::nextafter(1.0, 0.0);
  if (p <= 0.0) return DBL_TRUE_MIN;
  return p;
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace

HeadParams HeadParams::zeros() {
  HeadParams p;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    p.layers[k].weights = RowMatrix::Zero(dim(k + 1), dim(k));
    p.layers[k].bias = Eigen::VectorXd::Zero(dim(k + 1));
  }
  return p;
}

bool HeadParams::has_canonical_shapes() const noexcept {
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const auto& l = layers[k];
    if (l.weights.rows() != dim(k + 1) || l.weights.cols() != dim(k) || l.bias.size() != dim(k + 1)) {
      return false;
    }
  }
  return true;
}

bool HeadParams::all_finite() const noexcept {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

std::array<std::span<double>, 2 * kLayerCount> HeadParams::tensors() {
  std::array<std::span<double>, 2 * kLayerCount> t;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    t[2 * k] = {layers[k].weights.data(), static_cast<std::size_t>(layers[k].weights.size())};
    t[2 * k + 1] = {layers[k].bias.data(), static_cast<std::size_t>(layers[k].bias.size())};
  }
  return t;
}

std::array<std::span<const double>, 2 * kLayerCount> HeadParams::tensors() const {
  std::array<std::span<const double>, 2 * kLayerCount> t;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    t[2 * k] = {layers[k].weights.data(), static_cast<std::size_t>(layers[k].weights.size())};
    t[2 * k + 1] = {layers[k].bias.data(), static_cast<std::size_t>(layers[k].bias.size())};
  }
  return t;
}

bool operator==(const HeadParams& a, const HeadParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!std::equal(ta[i].begin(), ta[i].end(), tb[i].begin(), tb[i].end())) return false;
  }
  return true;
}

ParamCounts param_count(const HeadParams& params) {
  ParamCounts c;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    c.per_layer[k] = params.layers[k].parameter_count();
    c.total += c.per_layer[k];
  }
  return c;
}

HeadParams init_params(std::uint64_t seed) {
  HeadParams p = HeadParams::zeros();
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    std::mt19937_64 rng(derive_seed({seed, 0x1417ULL, k}));
    const double fan_in = static_cast<double>(kLayerWidths[k]);
    const double gain = (k + 1 < kLayerCount) ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / fan_in);
    auto& w = p.layers[k].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = stddev * standard_normal(rng);
  }
  return p;
}

std::array<Eigen::VectorXd, kHiddenCount> dropout_masks(double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
  std::mt19937_64 rng(derive_seed({seed, 0xd509ULL}));
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  std::array<Eigen::VectorXd, kHiddenCount> masks;
  for (std::size_t k = 0; k < kHiddenCount; ++k) {
    masks[k].resize(dim(k + 1));
    for (Eigen::Index i = 0; i < masks[k].size(); ++i) {
      masks[k](i) = uniform01(rng) < keep ? scale : 0.0;
    }
  }
  return masks;
}

ForwardResult forward(const HeadParams& params, const Embedding& embedding,
                      const DropoutSpec& dropout, std::uint64_t seed) {
  const bool train = dropout.mode == DropoutMode::train;
  ForwardResult r;
  ForwardTrace& t = r.trace;
  t.input = Eigen::Map<const Eigen::VectorXd>(embedding.values().data(), dim(0));
  if (train) t.masks = dropout_masks(dropout.rate, seed);

  const Eigen::VectorXd* x = &t.input;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const auto& layer = params.layers[k];
    t.pre_activations[k].noalias() = layer.weights * (*x);
    t.pre_activations[k] += layer.bias;
    require_finite(t.pre_activations[k], "head pre-activation");
    if (k + 1 == kLayerCount) break;
    t.activations[k] = t.pre_activations[k].cwiseMax(0.0);
    if (train) t.activations[k] = t.activations[k].cwiseProduct(t.masks[k]);
    x = &t.activations[k];
  }
  t.logit = t.pre_activations[kLayerCount - 1](0);
  t.probability = open_unit(sigmoid(t.logit));
  r.probability = t.probability;
  return r;
}

double bce_loss(double probability, Label label) {
  const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label == Label::positive ? -std::log(p) : -std::log1p(-p);
}

HeadGradients backward(const HeadParams& params, const ForwardTrace& trace, Label label) {
  HeadGradients g;
  // d(loss)/d(logit) for sigmoid + cross-entropy.
  Eigen::VectorXd delta(1);
  delta(0) = trace.probability - label_value(label);
  for (std::size_t k = kLayerCount; k-- > 0;) {
    const Eigen::VectorXd& in = k == 0 ? trace.input : trace.activations[k - 1];
    g.layers[k].weights.noalias() = delta * in.transpose();
    g.layers[k].bias = delta;
    if (k == 0) break;
    Eigen::VectorXd upstream = params.layers[k].weights.transpose() * delta;
    const Eigen::VectorXd& z = trace.pre_activations[k - 1];
    for (Eigen::Index i = 0; i < upstream.size(); ++i) {
      if (z(i) <= 0.0) upstream(i) = 0.0;
    }
    if (trace.masks[k - 1].size() != 0) upstream = upstream.cwiseProduct(trace.masks[k - 1]);
    delta = std::move(upstream);
  }
  if (!g.all_finite()) throw NumericError("non-finite gradient");
  return g;
}

BatchOutcome batch_gradient(const HeadParams& params, std::span<const Embedding* const> inputs,
                            std::span<const Label> labels, const DropoutSpec& dropout,
                            std::span<const std::uint64_t> seeds) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  if (n == 0) throw EmptyInput("batch_gradient needs at least one example");
  const bool train = dropout.mode == DropoutMode::train;
  if (labels.size() != inputs.size() || (train && seeds.size() != inputs.size())) {
    throw LengthMismatch("batch inputs, labels and seeds must have equal length");
  }

  RowMatrix x(n, dim(0));
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(inputs[static_cast<std::size_t>(i)]->values().data(),
                                                    dim(0));
  }
  std::array<RowMatrix, kHiddenCount> masks;
  if (train) {
    for (std::size_t k = 0; k < kHiddenCount; ++k) masks[k].resize(n, dim(k + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto m = dropout_masks(dropout.rate, seeds[static_cast<std::size_t>(i)]);
      for (std::size_t k = 0; k < kHiddenCount; ++k) masks[k].row(i) = m[k].transpose();
    }
  }

  // Forward: rows are examples.
  std::array<RowMatrix, kLayerCount> pre;
  std::array<RowMatrix, kHiddenCount> act;
  const RowMatrix* a = &x;
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const auto& layer = params.layers[k];
    pre[k].noalias() = (*a) * layer.weights.transpose();
    pre[k].rowwise() += layer.bias.transpose();
    require_finite(pre[k], "head pre-activation");
    if (k + 1 == kLayerCount) break;
    act[k] = pre[k].cwiseMax(0.0);
    if (train) act[k] = act[k].cwiseProduct(masks[k]);
    a = &act[k];
  }

  BatchOutcome out;
  out.probabilities.resize(static_cast<std::size_t>(n));
  RowMatrix delta(n, 1);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double p = open_unit(sigmoid(pre[kLayerCount - 1](i, 0)));
    out.probabilities[idx] = p;
    loss += bce_loss(p, labels[idx]);
    delta(i, 0) = (p - label_value(labels[idx])) / static_cast<double>(n);
  }
  out.mean_loss = loss / static_cast<double>(n);

  HeadGradients& g = out.mean_gradient;
  for (std::size_t k = kLayerCount; k-- > 0;) {
    const RowMatrix& in = k == 0 ? x : act[k - 1];
    g.layers[k].weights.noalias() = delta.transpose() * in;
    g.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    RowMatrix upstream = delta * params.layers[k].weights;
    upstream = upstream.cwiseProduct((pre[k - 1].array() > 0.0).cast<double>().matrix());
    if (train) upstream = upstream.cwiseProduct(masks[k - 1]);
    delta = std::move(upstream);
  }
  if (!g.all_finite()) throw NumericError("non-finite gradient");
  return out;
}

OptimizerState OptimizerState::create(const OptimizerConfig& config) {
  if (!std::isfinite(config.learning_rate) || config.learning_rate < 0.0) {
    throw Error("learning rate must be a non-negative finite number", ErrorCategory::usage);
  }
  OptimizerState s;
  s.config = config;
  s.m = HeadParams::zeros();
  s.v = HeadParams::zeros();
  return s;
}

void apply_update(HeadParams& params, const HeadGradients& grads, OptimizerState& state) {
  if (!grads.has_canonical_shapes() || !params.has_canonical_shapes()) {
    throw ShapeError("parameter and gradient shapes must match the head layout");
  }
  const auto& cfg = state.config;
  ++state.step;
  auto p = params.tensors();
  const auto g = grads.tensors();
  if (cfg.kind == OptimizerKind::sgd) {
    for (std::size_t t = 0; t < p.size(); ++t) {
      for (std::size_t i = 0; i < p[t].size(); ++i) p[t][i] -= cfg.learning_rate * g[t][i];
    }
    return;
  }
  if (!state.m.has_canonical_shapes() || !state.v.has_canonical_shapes()) {
    throw ShapeError("Adam moments are not initialised");
  }
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * gi;
      v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[k][i] / c1;
      const double v_hat = v[k][i] / c2;
      p[k][i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace screening
