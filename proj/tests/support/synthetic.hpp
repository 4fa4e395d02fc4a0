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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "screening/backbone.hpp"
#include "screening/dataset.hpp"
#include "screening/image.hpp"

namespace screening::testing {

/// Scanned-page stand-ins: 224x224 light pages with dark ink whose density
/// per 16x16 block follows a class template. The two templates differ in a
/// fixed set of blocks, so pooled features separate the classes.
struct SyntheticPages {
  std::vector<RasterImage> images;
  std::vector<Label> labels;
};

/// `positives` of the `count` pages are positive, at shuffled positions.
SyntheticPages synthetic_pages(std::size_t count, std::size_t positives, std::uint64_t seed);

/// Embeds the pages with `backbone`; source ids are "page-<i>".
std::vector<LabeledExample> embed_pages(const SyntheticPages& pages, const Backbone& backbone);

/// Gaussian clusters directly in embedding space: class centres drawn from
/// N(0, 1), examples spread with `spread` around their centre.
std::vector<LabeledExample> cluster_dataset(std::size_t count, std::size_t positives,
                                            std::uint64_t seed, double spread);

}  // namespace screening::testing
