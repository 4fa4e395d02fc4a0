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
"""Export an ImageNet-trained MobileNetV2 feature extractor to ONNX.

The exported graph takes one NHWC float tensor of shape 1x224x224x3 with
values in [-1, 1] (what the C++ preprocessing produces) and returns the
1280-wide global-average-pooled feature vector. The ImageNet mean/std
normalisation torchvision expects is folded into the graph.

Weights come from torchvision's model zoo (download.pytorch.org) on first
use and are cached under ~/.cache/torch.

    python3 tools/export_backbone.py --out models/mobilenet_v2.onnx
"""

import argparse
import hashlib
import pathlib

import torch
import torchvision

MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)


class FeatureExtractor(torch.nn.Module):
    def __init__(self, net):
        super().__init__()
        self.features = net.features
        self.register_buffer("mean", torch.tensor(MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(STD).view(1, 3, 1, 1))

    def forward(self, x):
        x = x.permute(0, 3, 1, 2)
        x = ((x + 1.0) * 0.5 - self.mean) / self.std
        x = self.features(x)
        return torch.flatten(torch.nn.functional.adaptive_avg_pool2d(x, 1), 1)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, type=pathlib.Path)
    parser.add_argument("--weights", choices=["IMAGENET1K_V1", "IMAGENET1K_V2", "none"], default="IMAGENET1K_V1",
                        help="torchvision weight set; 'none' gives random weights for offline smoke tests")
    args = parser.parse_args()

    weights = None if args.weights == "none" else args.weights
    torch.manual_seed(0)
    net = torchvision.models.mobilenet_v2(weights=weights).eval()
    model = FeatureExtractor(net).eval()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    torch.onnx.export(model, torch.zeros(1, 224, 224, 3), str(args.out), input_names=["input"],
                      output_names=["embedding"], opset_version=13, dynamo=False)

    with torch.no_grad():
        dim = model(torch.zeros(1, 224, 224, 3)).shape[1]
    digest = hashlib.sha256(args.out.read_bytes()).hexdigest()
    frozen = sum(p.numel() for p in net.features.parameters())
    print(f"wrote {args.out} ({dim}-d output, {frozen} backbone parameters, sha256 {digest})")


if __name__ == "__main__":
    main()
