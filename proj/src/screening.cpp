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

#include "screening/screening.hpp"

#include <chrono>

#include "json.hpp"
#include "screening/errors.hpp"
#include "screening/head.hpp"
#include "screening/image.hpp"

namespace screening {

ScreeningResult run_screening(std::span<const std::uint8_t> image_bytes, const Backbone& backbone,
                              const LoadedModel& model, const ScreeningOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ScreeningResult result;
  if (backbone.digest() != model.metadata.backbone_digest) {
    const std::string msg = "backbone digest " + to_hex(backbone.digest()) +
                            " differs from the digest recorded in the model (" +
                            to_hex(model.metadata.backbone_digest) + ")";
    if (options.strict_backbone) throw BackboneMismatch(msg);
    result.warnings.push_back(msg);
  }
  if (model.metadata.normalization_id != kNormalizationId) {
    result.warnings.push_back("model was trained with normalization '" +
                              model.metadata.normalization_id + "'");
  }
  const RasterImage img = decode_image(image_bytes);
  const TensorImage tensor = preprocess(img);
  const Embedding emb = embed(backbone, tensor);
  const auto fwd = forward(model.params, emb, DropoutSpec::inference());

  result.probability = fwd.probability;
  result.threshold = model.metadata.threshold;
  result.label = fwd.probability >= result.threshold ? Label::positive : Label::negative;
  result.model_version = model.model_version;
  result.timing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string to_json(const ScreeningResult& result, int indent) {
  nlohmann::ordered_json j;
  j["probability"] = result.probability;
  j["label"] = std::string(label_name(result.label));
  j["threshold"] = result.threshold;
  j["model_version"] = result.model_version;
  j["timing_ms"] = result.timing_ms;
  if (!result.warnings.empty()) j["warnings"] = result.warnings;
  return j.dump(indent);
}

}  // namespace screening
