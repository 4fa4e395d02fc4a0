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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "screening/backbone.hpp"
#include "screening/label.hpp"
#include "screening/model_io.hpp"

namespace screening {

struct ScreeningOptions {
  /// Refuse to run when the backbone digest differs from the one recorded in
  /// the artifact. Otherwise the mismatch is reported as a warning.
  bool strict_backbone = false;
};

struct ScreeningResult {
  double probability = 0.5;
  Label label = Label::negative;  // positive iff probability >= threshold
  double threshold = 0.5;
  std::string model_version;
  double timing_ms = 0.0;
  std::vector<std::string> warnings;
};

/// decode -> preprocess -> embed -> inference-mode forward -> threshold.
/// Throws DecodeError, InferenceError, or BackboneMismatch (strict mode).
ScreeningResult run_screening(std::span<const std::uint8_t> image_bytes, const Backbone& backbone,
                              const LoadedModel& model, const ScreeningOptions& options = {});

std::string to_json(const ScreeningResult& result, int indent = -1);

}  // namespace screening
