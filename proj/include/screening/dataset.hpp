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

#include <string>

#include "screening/backbone.hpp"
#include "screening/label.hpp"

namespace screening {

/// One embedded image with its outcome label.
struct LabeledExample {
  Embedding embedding;
  Label label = Label::negative;
  /// Opaque grouping key (file name, image digest or student identifier).
  std::string source_id;
};

}  // namespace screening
