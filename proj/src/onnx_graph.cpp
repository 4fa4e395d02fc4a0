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

#include "onnx_graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "onnx.pb.h"
#include "screening/errors.hpp"

namespace screening::onnx_rt {

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

struct Attribute {
  float f = 0.0f;
  std::int64_t i = 0;
  std::string s;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  Tensor t;
};

struct Graph::Node {
  std::string op;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attrs;

  bool has(const std::string& key) const { return attrs.count(key) != 0; }
  std::int64_t int_attr(const std::string& key, std::int64_t def) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? def : it->second.i;
  }
  float float_attr(const std::string& key, float def) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? def : it->second.f;
  }
  std::vector<std::int64_t> ints_attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? std::vector<std::int64_t>{} : it->second.ints;
  }
  std::string string_attr(const std::string& key, const std::string& def) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? def : it->second.s;
  }
};

Graph::Graph() = default;
Graph::~Graph() = default;
Graph::Graph(Graph&&) noexcept = default;
Graph& Graph::operator=(Graph&&) noexcept = default;

namespace {

[[noreturn]] void fail(const std::string& what) { throw InferenceError(what); }

template <class T>
void read_raw(const std::string& raw, std::vector<T>& out, std::size_t count) {
  if (raw.size() != count * sizeof(T)) {
    throw FormatError("tensor raw_data has " + std::to_string(raw.size()) + " bytes, expected " +
                          std::to_string(count * sizeof(T)),
                      0);
  }
  out.resize(count);
  // ONNX raw_data is little-endian; so is every platform this builds on.
  std::memcpy(out.data(), raw.data(), raw.size());
}

Tensor convert_tensor(const onnx::TensorProto& tp) {
  if (tp.data_location() == onnx::TensorProto::EXTERNAL) {
    throw FormatError("tensor '" + tp.name() + "' uses external data, which is not supported", 0);
  }
  Tensor t;
  t.shape.assign(tp.dims().begin(), tp.dims().end());
  const std::size_t n = t.numel();
  switch (tp.data_type()) {
    case onnx::TensorProto::FLOAT:
      if (tp.has_raw_data()) {
        read_raw(tp.raw_data(), t.data, n);
      } else {
        t.data.assign(tp.float_data().begin(), tp.float_data().end());
      }
      break;
    case onnx::TensorProto::DOUBLE: {
      std::vector<double> d;
      if (tp.has_raw_data()) {
        read_raw(tp.raw_data(), d, n);
      } else {
        d.assign(tp.double_data().begin(), tp.double_data().end());
      }
      t.data.assign(d.begin(), d.end());
      break;
    }
    case onnx::TensorProto::INT64:
      t.is_int = true;
      if (tp.has_raw_data()) {
        read_raw(tp.raw_data(), t.ints, n);
      } else {
        t.ints.assign(tp.int64_data().begin(), tp.int64_data().end());
      }
      break;
    case onnx::TensorProto::INT32: {
      t.is_int = true;
      std::vector<std::int32_t> v;
      if (tp.has_raw_data()) {
        read_raw(tp.raw_data(), v, n);
      } else {
        v.assign(tp.int32_data().begin(), tp.int32_data().end());
      }
      t.ints.assign(v.begin(), v.end());
      break;
    }
    default:
      throw FormatError("tensor '" + tp.name() + "' has unsupported data type " +
                            std::to_string(tp.data_type()),
                        0);
  }
  const std::size_t got = t.is_int ? t.ints.size() : t.data.size();
  if (got != n) {
    throw FormatError("tensor '" + tp.name() + "' holds " + std::to_string(got) +
                          " values for shape of " + std::to_string(n),
                      0);
  }
  return t;
}

DeclaredShape declared_shape(const onnx::ValueInfoProto& vi) {
  DeclaredShape s;
  if (!vi.type().has_tensor_type() || !vi.type().tensor_type().has_shape()) return s;
  for (const auto& d : vi.type().tensor_type().shape().dim()) {
    s.push_back(d.has_dim_value() ? d.dim_value() : -1);
  }
  return s;
}

const std::unordered_set<std::string>& supported_ops() {
  static const std::unordered_set<std::string> ops = {
      "Conv",    "Clip",      "Relu",      "Sigmoid", "Sqrt",         "Add",
      "Sub",     "Mul",       "Div",       "GlobalAveragePool",       "ReduceMean",
      "Flatten", "Reshape",   "Squeeze",   "Unsqueeze", "Transpose",  "Gemm",
      "MatMul",  "BatchNormalization",     "Pad",     "Identity",     "Constant",
      "Dropout"};
  return ops;
}

// ---- helpers ---------------------------------------------------------------

std::vector<std::size_t> strides_of(const std::vector<std::int64_t>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * static_cast<std::size_t>(shape[i]);
  return s;
}

std::int64_t normalize_axis(std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) fail("axis out of range");
  return axis;
}

Tensor binary(const Tensor& a, const Tensor& b, const std::function<float(float, float)>& op) {
  if (a.is_int || b.is_int) fail("elementwise arithmetic on integer tensors is not supported");
  const std::size_t rank = std::max(a.shape.size(), b.shape.size());
  std::vector<std::int64_t> as(rank, 1), bs(rank, 1), os(rank, 1);
  std::copy(a.shape.begin(), a.shape.end(), as.begin() + (rank - a.shape.size()));
  std::copy(b.shape.begin(), b.shape.end(), bs.begin() + (rank - b.shape.size()));
  for (std::size_t i = 0; i < rank; ++i) {
    if (as[i] != bs[i] && as[i] != 1 && bs[i] != 1) fail("incompatible broadcast shapes");
    os[i] = std::max(as[i], bs[i]);
  }
  Tensor out;
  out.shape = os;
  out.data.resize(out.numel());
  const auto ast = strides_of(as);
  const auto bst = strides_of(bs);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    std::size_t ai = 0, bi = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      if (as[d] != 1) ai += static_cast<std::size_t>(idx[d]) * ast[d];
      if (bs[d] != 1) bi += static_cast<std::size_t>(idx[d]) * bst[d];
    }
    out.data[k] = op(a.data[ai], b.data[bi]);
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm) {
  const std::size_t rank = x.shape.size();
  if (perm.empty()) {
    perm.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) perm[i] = static_cast<std::int64_t>(rank - 1 - i);
  }
  if (perm.size() != rank) fail("Transpose perm rank mismatch");
  Tensor out;
  out.is_int = x.is_int;
  out.shape.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) out.shape[i] = x.shape[static_cast<std::size_t>(perm[i])];
  const auto in_st = strides_of(x.shape);
  const std::size_t n = x.numel();
  if (x.is_int) out.ints.resize(n); else out.data.resize(n);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      src += static_cast<std::size_t>(idx[d]) * in_st[static_cast<std::size_t>(perm[d])];
    }
    if (x.is_int) out.ints[k] = x.ints[src]; else out.data[k] = x.data[src];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out.shape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

struct ConvGeometry {
  std::int64_t kh, kw, sh, sw, dh, dw, pt, pl, pb, pr, oh, ow;
};

ConvGeometry conv_geometry(const Graph::Node& node, std::int64_t h, std::int64_t w,
                           std::int64_t kh, std::int64_t kw) {
  ConvGeometry g{};
  g.kh = kh;
  g.kw = kw;
  auto strides = node.ints_attr("strides");
  auto dil = node.ints_attr("dilations");
  auto pads = node.ints_attr("pads");
  g.sh = strides.size() == 2 ? strides[0] : 1;
  g.sw = strides.size() == 2 ? strides[1] : 1;
  g.dh = dil.size() == 2 ? dil[0] : 1;
  g.dw = dil.size() == 2 ? dil[1] : 1;
  const std::string auto_pad = node.string_attr("auto_pad", "NOTSET");
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    auto same = [&](std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d,
                    std::int64_t& begin, std::int64_t& end) {
      const std::int64_t out = (in + s - 1) / s;
      const std::int64_t total = std::max<std::int64_t>((out - 1) * s + d * (k - 1) + 1 - in, 0);
      begin = auto_pad == "SAME_UPPER" ? total / 2 : total - total / 2;
      end = total - begin;
    };
    same(h, kh, g.sh, g.dh, g.pt, g.pb);
    same(w, kw, g.sw, g.dw, g.pl, g.pr);
  } else if (auto_pad == "VALID") {
    g.pt = g.pl = g.pb = g.pr = 0;
  } else {
    if (!pads.empty() && pads.size() != 4) fail("Conv pads must have 4 entries");
    g.pt = pads.empty() ? 0 : pads[0];
    g.pl = pads.empty() ? 0 : pads[1];
    g.pb = pads.empty() ? 0 : pads[2];
    g.pr = pads.empty() ? 0 : pads[3];
  }
  g.oh = (h + g.pt + g.pb - g.dh * (kh - 1) - 1) / g.sh + 1;
  g.ow = (w + g.pl + g.pr - g.dw * (kw - 1) - 1) / g.sw + 1;
  if (g.oh <= 0 || g.ow <= 0) fail("Conv output would be empty");
  return g;
}

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor conv(const Graph::Node& node, const Tensor& x, const Tensor& wt, const Tensor* bias) {
  if (x.shape.size() != 4 || wt.shape.size() != 4) fail("Conv supports 2-D spatial inputs only");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t m = wt.shape[0], cg = wt.shape[1], kh = wt.shape[2], kw = wt.shape[3];
  const std::int64_t groups = node.int_attr("group", 1);
  if (groups <= 0 || c % groups != 0 || m % groups != 0 || c / groups != cg) {
    fail("Conv channel/group mismatch");
  }
  if (bias && static_cast<std::int64_t>(bias->data.size()) != m) fail("Conv bias length mismatch");
  const ConvGeometry g = conv_geometry(node, h, w, kh, kw);
  const std::int64_t mg = m / groups;

  Tensor out;
  out.shape = {n, m, g.oh, g.ow};
  out.data.assign(out.numel(), 0.0f);
  const std::int64_t plane = g.oh * g.ow;

  auto sample = [&](const float* chan, std::int64_t oy, std::int64_t ox, std::int64_t ky,
                    std::int64_t kx) -> float {
    const std::int64_t iy = oy * g.sh - g.pt + ky * g.dh;
    const std::int64_t ix = ox * g.sw - g.pl + kx * g.dw;
    if (iy < 0 || ix < 0 || iy >= h || ix >= w) return 0.0f;
    return chan[iy * w + ix];
  };

  for (std::int64_t b = 0; b < n; ++b) {
    const float* xb = x.data.data() + b * c * h * w;
    float* ob = out.data.data() + b * m * plane;
    if (cg == 1 && mg == 1) {
      // Depthwise.
      for (std::int64_t ch = 0; ch < m; ++ch) {
        const float* chan = xb + ch * h * w;
        const float* k = wt.data.data() + ch * kh * kw;
        float* o = ob + ch * plane;
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            float acc = 0.0f;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                acc += k[ky * kw + kx] * sample(chan, oy, ox, ky, kx);
              }
            }
            o[oy * g.ow + ox] = acc;
          }
        }
      }
    } else {
      const std::int64_t kdim = cg * kh * kw;
      const bool pointwise = kh == 1 && kw == 1 && g.sh == 1 && g.sw == 1 && g.pt == 0 &&
                             g.pl == 0 && g.pb == 0 && g.pr == 0;
      RowMatrix cols;
      for (std::int64_t gi = 0; gi < groups; ++gi) {
        const float* xg = xb + gi * cg * h * w;
        Eigen::Map<const RowMatrix> kernel(wt.data.data() + gi * mg * kdim, mg, kdim);
        Eigen::Map<RowMatrix> og(ob + gi * mg * plane, mg, plane);
        if (pointwise) {
          og.noalias() = kernel * Eigen::Map<const RowMatrix>(xg, cg, plane);
          continue;
        }
        cols.resize(kdim, plane);
        for (std::int64_t ci = 0; ci < cg; ++ci) {
          const float* chan = xg + ci * h * w;
          for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              const std::int64_t row = (ci * kh + ky) * kw + kx;
              for (std::int64_t oy = 0; oy < g.oh; ++oy) {
                for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                  cols(row, oy * g.ow + ox) = sample(chan, oy, ox, ky, kx);
                }
              }
            }
          }
        }
        og.noalias() = kernel * cols;
      }
    }
    if (bias) {
      for (std::int64_t ch = 0; ch < m; ++ch) {
        float* o = ob + ch * plane;
        const float bv = bias->data[static_cast<std::size_t>(ch)];
        for (std::int64_t k = 0; k < plane; ++k) o[k] += bv;
      }
    }
  }
  return out;
}

Tensor gemm(const Graph::Node& node, const Tensor& a, const Tensor& b, const Tensor* c) {
  if (a.shape.size() != 2 || b.shape.size() != 2) fail("Gemm expects 2-D operands");
  const bool ta = node.int_attr("transA", 0) != 0;
  const bool tb = node.int_attr("transB", 0) != 0;
  const float alpha = node.float_attr("alpha", 1.0f);
  const float beta = node.float_attr("beta", 1.0f);
  Eigen::Map<const RowMatrix> am(a.data.data(), a.shape[0], a.shape[1]);
  Eigen::Map<const RowMatrix> bm(b.data.data(), b.shape[0], b.shape[1]);
  RowMatrix lhs = ta ? RowMatrix(am.transpose()) : RowMatrix(am);
  RowMatrix rhs = tb ? RowMatrix(bm.transpose()) : RowMatrix(bm);
  if (lhs.cols() != rhs.rows()) fail("Gemm inner dimension mismatch");
  RowMatrix prod = alpha * (lhs * rhs);
  Tensor out;
  out.shape = {prod.rows(), prod.cols()};
  out.data.assign(prod.data(), prod.data() + prod.size());
  if (c) {
    Tensor scaled = *c;
    for (auto& v : scaled.data) v *= beta;
    out = binary(out, scaled, std::plus<float>());
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.shape.size() != 2 || a.shape.empty()) fail("MatMul supports an N-D by 2-D product only");
  const std::int64_t k = a.shape.back();
  if (k != b.shape[0]) fail("MatMul inner dimension mismatch");
  const std::int64_t rows = static_cast<std::int64_t>(a.numel()) / k;
  Eigen::Map<const RowMatrix> am(a.data.data(), rows, k);
  Eigen::Map<const RowMatrix> bm(b.data.data(), b.shape[0], b.shape[1]);
  RowMatrix prod = am * bm;
  Tensor out;
  out.shape = a.shape;
  out.shape.back() = b.shape[1];
  out.data.assign(prod.data(), prod.data() + prod.size());
  return out;
}

Tensor reduce_mean(const Tensor& x, std::vector<std::int64_t> axes, bool keepdims) {
  const std::size_t rank = x.shape.size();
  if (axes.empty()) {
    axes.resize(rank);
    std::iota(axes.begin(), axes.end(), 0);
  }
  std::vector<bool> reduce(rank, false);
  for (auto a : axes) reduce[static_cast<std::size_t>(normalize_axis(a, rank))] = true;
  std::vector<std::int64_t> kept(rank);
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    kept[d] = reduce[d] ? 1 : x.shape[d];
    if (reduce[d]) count *= static_cast<std::size_t>(x.shape[d]);
  }
  Tensor out;
  out.shape = kept;
  std::vector<double> acc(out.numel(), 0.0);
  const auto ost = strides_of(kept);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      if (!reduce[d]) o += static_cast<std::size_t>(idx[d]) * ost[d];
    }
    acc[o] += x.data[k];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < x.shape[d]) break;
      idx[d] = 0;
    }
  }
  out.data.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.data[i] = static_cast<float>(acc[i] / static_cast<double>(count));
  }
  if (!keepdims) {
    std::vector<std::int64_t> s;
    for (std::size_t d = 0; d < rank; ++d) {
      if (!reduce[d]) s.push_back(x.shape[d]);
    }
    out.shape = s;
  }
  return out;
}

Tensor pad(const Tensor& x, const std::vector<std::int64_t>& pads, float value) {
  const std::size_t rank = x.shape.size();
  if (pads.size() != 2 * rank) fail("Pad expects 2*rank pad values");
  for (auto p : pads) {
    if (p < 0) fail("negative Pad values are not supported");
  }
  Tensor out;
  out.shape.resize(rank);
  for (std::size_t d = 0; d < rank; ++d) out.shape[d] = x.shape[d] + pads[d] + pads[d + rank];
  out.data.assign(out.numel(), value);
  const auto ost = strides_of(out.shape);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < rank; ++d) o += static_cast<std::size_t>(idx[d] + pads[d]) * ost[d];
    out.data[o] = x.data[k];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < x.shape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

}  // namespace

Graph Graph::parse(std::span<const std::uint8_t> bytes) {
  onnx::ModelProto model;
  if (bytes.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()) ||
      !model.ParseFromArray(bytes.data(), static_cast<int>(bytes.size()))) {
    throw FormatError("not a valid ONNX model (protobuf parse failed)", 0);
  }
  if (!model.has_graph()) throw FormatError("ONNX model has no graph", 0);
  const auto& gp = model.graph();

  Graph g;
  std::unordered_set<std::string> init_names;
  for (const auto& t : gp.initializer()) {
    g.initializers_.emplace_back(t.name(), convert_tensor(t));
    init_names.insert(t.name());
  }
  std::vector<const onnx::ValueInfoProto*> inputs;
  for (const auto& in : gp.input()) {
    if (!init_names.count(in.name())) inputs.push_back(&in);
  }
  if (inputs.size() != 1) {
    throw BackboneShapeError("backbone graph must have exactly one data input, found " +
                             std::to_string(inputs.size()));
  }
  if (gp.output_size() != 1) {
    throw BackboneShapeError("backbone graph must have exactly one output, found " +
                             std::to_string(gp.output_size()));
  }
  g.input_name_ = inputs[0]->name();
  g.input_shape_ = declared_shape(*inputs[0]);
  g.output_name_ = gp.output(0).name();
  g.output_shape_ = declared_shape(gp.output(0));

  for (const auto& np : gp.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx") {
      fail("unsupported operator domain '" + np.domain() + "'");
    }
    if (!supported_ops().count(np.op_type())) fail("unsupported operator '" + np.op_type() + "'");
    auto node = std::make_unique<Node>();
    node->op = np.op_type();
    node->name = np.name();
    node->inputs.assign(np.input().begin(), np.input().end());
    node->outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) {
      Attribute a;
      a.f = ap.f();
      a.i = ap.i();
      a.s = ap.s();
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      if (ap.has_t()) a.t = convert_tensor(ap.t());
      node->attrs.emplace(ap.name(), std::move(a));
    }
    g.nodes_.push_back(std::move(node));
  }
  return g;
}

Tensor Graph::run(Tensor input) const {
  std::unordered_map<std::string, const Tensor*> inits;
  for (const auto& [name, t] : initializers_) inits.emplace(name, &t);
  std::unordered_map<std::string, Tensor> env;
  env.emplace(input_name_, std::move(input));

  auto get = [&](const std::string& name) -> const Tensor& {
    if (auto it = env.find(name); it != env.end()) return it->second;
    if (auto it = inits.find(name); it != inits.end()) return *it->second;
    fail("graph value '" + name + "' is undefined");
  };
  auto opt = [&](const Node& n, std::size_t i) -> const Tensor* {
    if (i >= n.inputs.size() || n.inputs[i].empty()) return nullptr;
    return &get(n.inputs[i]);
  };
  auto axes_of = [&](const Node& n, std::size_t input_index) {
    if (const Tensor* t = opt(n, input_index)) return t->ints;
    return n.ints_attr("axes");
  };

  for (const auto& np : nodes_) {
    const Node& n = *np;
    if (n.outputs.empty()) continue;
    Tensor out;
    const std::string& op = n.op;
    if (op == "Conv") {
      out = conv(n, get(n.inputs.at(0)), get(n.inputs.at(1)), opt(n, 2));
    } else if (op == "Clip") {
      float lo = n.float_attr("min", -std::numeric_limits<float>::infinity());
      float hi = n.float_attr("max", std::numeric_limits<float>::infinity());
      if (const Tensor* t = opt(n, 1)) lo = t->data.at(0);
      if (const Tensor* t = opt(n, 2)) hi = t->data.at(0);
      out = get(n.inputs.at(0));
      for (auto& v : out.data) v = std::min(std::max(v, lo), hi);
    } else if (op == "Relu") {
      out = get(n.inputs.at(0));
      for (auto& v : out.data) v = std::max(v, 0.0f);
    } else if (op == "Sigmoid") {
      out = get(n.inputs.at(0));
      for (auto& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
    } else if (op == "Sqrt") {
      out = get(n.inputs.at(0));
      for (auto& v : out.data) v = std::sqrt(v);
    } else if (op == "Add") {
      out = binary(get(n.inputs.at(0)), get(n.inputs.at(1)), std::plus<float>());
    } else if (op == "Sub") {
      out = binary(get(n.inputs.at(0)), get(n.inputs.at(1)), std::minus<float>());
    } else if (op == "Mul") {
      out = binary(get(n.inputs.at(0)), get(n.inputs.at(1)), std::multiplies<float>());
    } else if (op == "Div") {
      out = binary(get(n.inputs.at(0)), get(n.inputs.at(1)), std::divides<float>());
    } else if (op == "GlobalAveragePool") {
      const Tensor& x = get(n.inputs.at(0));
      if (x.shape.size() < 3) fail("GlobalAveragePool expects N x C x spatial input");
      std::vector<std::int64_t> axes;
      for (std::size_t d = 2; d < x.shape.size(); ++d) axes.push_back(static_cast<std::int64_t>(d));
      out = reduce_mean(x, axes, true);
    } else if (op == "ReduceMean") {
      out = reduce_mean(get(n.inputs.at(0)), axes_of(n, 1), n.int_attr("keepdims", 1) != 0);
    } else if (op == "Flatten") {
      out = get(n.inputs.at(0));
      const auto axis =
          static_cast<std::size_t>(normalize_axis(n.int_attr("axis", 1), out.shape.size() + 1));
      std::int64_t outer = 1, inner = 1;
      for (std::size_t d = 0; d < out.shape.size(); ++d) (d < axis ? outer : inner) *= out.shape[d];
      out.shape = {outer, inner};
    } else if (op == "Reshape") {
      out = get(n.inputs.at(0));
      const Tensor& spec = get(n.inputs.at(1));
      std::vector<std::int64_t> shape = spec.ints;
      std::int64_t known = 1;
      int infer = -1;
      for (std::size_t d = 0; d < shape.size(); ++d) {
        if (shape[d] == 0) {
          if (d >= out.shape.size()) fail("Reshape copies a missing dimension");
          shape[d] = out.shape[d];
        }
        if (shape[d] == -1) {
          if (infer >= 0) fail("Reshape has more than one -1");
          infer = static_cast<int>(d);
        } else {
          known *= shape[d];
        }
      }
      const auto total = static_cast<std::int64_t>(out.numel());
      if (infer >= 0) {
        if (known == 0 || total % known != 0) fail("Reshape cannot infer dimension");
        shape[static_cast<std::size_t>(infer)] = total / known;
      } else if (known != total) {
        fail("Reshape element count mismatch");
      }
      out.shape = shape;
    } else if (op == "Squeeze") {
      out = get(n.inputs.at(0));
      auto axes = axes_of(n, 1);
      std::vector<bool> drop(out.shape.size(), false);
      if (axes.empty()) {
        for (std::size_t d = 0; d < out.shape.size(); ++d) drop[d] = out.shape[d] == 1;
      }
      for (auto a : axes) {
        const auto d = static_cast<std::size_t>(normalize_axis(a, out.shape.size()));
        if (out.shape[d] != 1) fail("Squeeze on a dimension that is not 1");
        drop[d] = true;
      }
      std::vector<std::int64_t> s;
      for (std::size_t d = 0; d < out.shape.size(); ++d) {
        if (!drop[d]) s.push_back(out.shape[d]);
      }
      out.shape = s;
    } else if (op == "Unsqueeze") {
      out = get(n.inputs.at(0));
      auto axes = axes_of(n, 1);
      const std::size_t rank = out.shape.size() + axes.size();
      std::vector<bool> ins(rank, false);
      for (auto a : axes) ins[static_cast<std::size_t>(normalize_axis(a, rank))] = true;
      std::vector<std::int64_t> s;
      std::size_t src = 0;
      for (std::size_t d = 0; d < rank; ++d) s.push_back(ins[d] ? 1 : out.shape[src++]);
      out.shape = s;
    } else if (op == "Transpose") {
      out = transpose(get(n.inputs.at(0)), n.ints_attr("perm"));
    } else if (op == "Gemm") {
      out = gemm(n, get(n.inputs.at(0)), get(n.inputs.at(1)), opt(n, 2));
    } else if (op == "MatMul") {
      out = matmul(get(n.inputs.at(0)), get(n.inputs.at(1)));
    } else if (op == "BatchNormalization") {
      out = get(n.inputs.at(0));
      const Tensor& scale = get(n.inputs.at(1));
      const Tensor& shift = get(n.inputs.at(2));
      const Tensor& mean = get(n.inputs.at(3));
      const Tensor& var = get(n.inputs.at(4));
      const float eps = n.float_attr("epsilon", 1e-5f);
      if (out.shape.size() < 2) fail("BatchNormalization expects N x C input");
      const auto c = static_cast<std::size_t>(out.shape[1]);
      std::size_t inner = 1;
      for (std::size_t d = 2; d < out.shape.size(); ++d) inner *= static_cast<std::size_t>(out.shape[d]);
      for (std::size_t k = 0; k < out.data.size(); ++k) {
        const std::size_t ch = (k / inner) % c;
        out.data[k] = scale.data[ch] * (out.data[k] - mean.data[ch]) / std::sqrt(var.data[ch] + eps) +
                      shift.data[ch];
      }
    } else if (op == "Pad") {
      const std::string mode = n.string_attr("mode", "constant");
      if (mode != "constant") fail("Pad mode '" + mode + "' is not supported");
      std::vector<std::int64_t> pads = n.ints_attr("pads");
      if (const Tensor* t = opt(n, 1)) pads = t->ints;
      float value = n.float_attr("value", 0.0f);
      if (const Tensor* t = opt(n, 2)) value = t->data.at(0);
      out = pad(get(n.inputs.at(0)), pads, value);
    } else if (op == "Identity" || op == "Dropout") {
      out = get(n.inputs.at(0));
    } else if (op == "Constant") {
      auto it = n.attrs.find("value");
      if (it == n.attrs.end()) fail("Constant node without a tensor 'value'");
      out = it->second.t;
    } else {
      fail("unsupported operator '" + op + "'");
    }
    env[n.outputs[0]] = std::move(out);
  }
  auto it = env.find(output_name_);
  if (it == env.end()) fail("graph output '" + output_name_ + "' was never produced");
  return std::move(it->second);
}

}  // namespace screening::onnx_rt
