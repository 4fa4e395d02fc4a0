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
#include <optional>
#include <string_view>

namespace screening {

/// Binary outcome: 0 = no diagnosis, 1 = diagnosis (the screened-for class).
enum class Label : std::uint8_t { negative = 0, positive = 1 };

constexpr double label_value(Label y) noexcept { return y == Label::positive ? 1.0 : 0.0; }

constexpr std::optional<Label> label_from_int(long long v) noexcept {
  if (v == 0) return Label::negative;
  if (v == 1) return Label::positive;
  return std::nullopt;
}

constexpr std::string_view label_name(Label y) noexcept {
  return y == Label::positive ? "positive" : "negative";
}

}  // namespace screening
