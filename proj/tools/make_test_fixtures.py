#!/usr/bin/env python3
# Copyright 2026 The Handwriting Screening Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the ONNX fixtures under tests/data.

Reference outputs come from onnxruntime, so the C++ interpreter is checked
against an independent implementation. Needs: numpy, onnx, onnxruntime,
torch, torchvision, Pillow.

    python3 tools/make_test_fixtures.py tests/data
"""
import pathlib
import sys

import numpy as np
import onnx
import onnxruntime as ort
from onnx import TensorProto, helper, numpy_helper


def pattern_input(layout, variant=0):
    """Deterministic 224x224x3 tensor the C++ tests rebuild bit-for-bit."""
    h, w, c = np.meshgrid(np.arange(224), np.arange(224), np.arange(3), indexing="ij")
    v = ((h * 7 + w * 13 + c * 29 + variant * 101) % 255).astype(np.float64)
    x = (v / 127.5 - 1.0).astype(np.float32)[None]
    if layout == "nchw":
        x = np.ascontiguousarray(x.transpose(0, 3, 1, 2))
    return x


def reference(path, x):
    sess = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
    return sess.run(None, {sess.get_inputs()[0].name: x})[0].astype(np.float32).reshape(-1)


def save(model, path):
    onnx.checker.check_model(model)
    onnx.save(model, str(path))


def mobilenet(out):
    import torch
    import torchvision

    torch.manual_seed(0)
    net = torchvision.models.mobilenet_v2(weights=None, width_mult=0.35)
    net.classifier = torch.nn.Identity()
    net.eval()

    class Nhwc(torch.nn.Module):
        def __init__(self, inner):
            super().__init__()
            self.inner = inner

        def forward(self, x):
            return self.inner(x.permute(0, 3, 1, 2))

    path = out / "mobilenetv2_w035_nhwc.onnx"
    torch.onnx.export(Nhwc(net), torch.zeros(1, 224, 224, 3), str(path), input_names=["input"],
                      output_names=["embedding"], opset_version=13, dynamo=False)
    for variant in (0, 1):
        reference(path, pattern_input("nhwc", variant)).tofile(
            out / f"mobilenetv2_w035_expected_{variant}.f32")


def tiny_nchw(out):
    rng = np.random.default_rng(7)
    f = lambda *s: rng.normal(0, 0.2, size=s).astype(np.float32)
    inits = [
        numpy_helper.from_array(np.array([0, 0, 1, 1, 0, 0, 1, 1], dtype=np.int64), "pads"),
        numpy_helper.from_array(f(8, 3, 3, 3), "w1"),
        numpy_helper.from_array(f(8), "b1"),
        numpy_helper.from_array(np.abs(f(8)) + 0.5, "bn_scale"),
        numpy_helper.from_array(f(8), "bn_bias"),
        numpy_helper.from_array(f(8), "bn_mean"),
        numpy_helper.from_array(np.abs(f(8)) + 0.5, "bn_var"),
        numpy_helper.from_array(f(8, 1, 3, 3), "w2"),
        numpy_helper.from_array(np.array([0.25], dtype=np.float32), "shift"),
        numpy_helper.from_array(np.array([2.0], dtype=np.float32), "gain"),
        numpy_helper.from_array(np.array([1, 8], dtype=np.int64), "shape"),
        numpy_helper.from_array(f(8, 1280), "proj"),
        numpy_helper.from_array(f(1280), "proj_bias"),
        numpy_helper.from_array(np.array([0.0], dtype=np.float32), "lo"),
        numpy_helper.from_array(np.array([6.0], dtype=np.float32), "hi"),
    ]
    nodes = [
        helper.make_node("Pad", ["input", "pads"], ["p"], mode="constant"),
        helper.make_node("Conv", ["p", "w1", "b1"], ["c1"], strides=[2, 2], kernel_shape=[3, 3]),
        helper.make_node("BatchNormalization", ["c1", "bn_scale", "bn_bias", "bn_mean", "bn_var"],
                         ["bn"], epsilon=1e-3),
        helper.make_node("Relu", ["bn"], ["r1"]),
        helper.make_node("Conv", ["r1", "w2"], ["c2"], group=8, strides=[2, 2], pads=[1, 1, 1, 1],
                         kernel_shape=[3, 3]),
        helper.make_node("Clip", ["c2", "lo", "hi"], ["r2"]),
        helper.make_node("Sub", ["r2", "shift"], ["s"]),
        helper.make_node("Mul", ["s", "gain"], ["m"]),
        helper.make_node("ReduceMean", ["m"], ["pooled"], axes=[2, 3], keepdims=1),
        helper.make_node("Reshape", ["pooled", "shape"], ["flat"]),
        helper.make_node("MatMul", ["flat", "proj"], ["mm"]),
        helper.make_node("Add", ["mm", "proj_bias"], ["z"]),
        helper.make_node("Sigmoid", ["z"], ["embedding"]),
    ]
    graph = helper.make_graph(
        nodes, "tiny_nchw",
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, 224, 224])],
        [helper.make_tensor_value_info("embedding", TensorProto.FLOAT, [1, 1280])], inits)
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    path = out / "tiny_nchw.onnx"
    save(model, path)
    reference(path, pattern_input("nchw")).tofile(out / "tiny_nchw_expected.f32")


def gap_gemm(out, name, features, output_dims, weight=None, bias=None, tail=None):
    rng = np.random.default_rng(11)
    wt = weight if weight is not None else rng.normal(0, 1, size=(features, 3)).astype(np.float32)
    b = bias if bias is not None else np.zeros(features, dtype=np.float32)
    nodes = [
        helper.make_node("Transpose", ["input"], ["nchw"], perm=[0, 3, 1, 2]),
        helper.make_node("GlobalAveragePool", ["nchw"], ["gap"]),
        helper.make_node("Flatten", ["gap"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "w", "b"], ["g" if tail else "embedding"], transB=1),
    ]
    if tail:
        nodes.append(helper.make_node(tail, ["g"], ["embedding"]))
    graph = helper.make_graph(
        nodes, name,
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 224, 224, 3])],
        [helper.make_tensor_value_info("embedding", TensorProto.FLOAT, output_dims)],
        [numpy_helper.from_array(wt, "w"), numpy_helper.from_array(b, "b")])
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    save(model, out / f"{name}.onnx")


def images(out):
    from PIL import Image
    Image.new("RGB", (1, 1), (255, 255, 255)).save(out / "white_1x1.png")
    Image.new("L", (20, 10), 40).save(out / "gray40_10x20.jpg", quality=90)
    Image.new("RGBA", (2, 1), (0, 0, 0, 0)).save(out / "transparent_2x1.png")
    rgb = Image.new("RGB", (5, 3))
    rgb.putdata([(x * 50, y * 100, (x + y) * 20) for y in range(3) for x in range(5)])
    rgb.save(out / "ramp_5x3.png")
    rgb.save(out / "ramp_5x3.jpg", quality=95)


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    images(out)
    mobilenet(out)
    tiny_nchw(out)
    gap_gemm(out, "classifier_1000", 1000, [1, 1000])
    gap_gemm(out, "symbolic_1000", 1000, ["batch", "features"])
    # All-ones weights: an all -1 image gives Sqrt(-3 + 0.5), i.e. NaN.
    gap_gemm(out, "sqrt_head", 1280, [1, 1280], weight=np.ones((1280, 3), np.float32),
             bias=np.full(1280, 0.5, np.float32), tail="Sqrt")
    # Unsupported operator.
    gap_gemm(out, "softmax_head", 1280, [1, 1280], tail="Softmax")


if __name__ == "__main__":
    main()
