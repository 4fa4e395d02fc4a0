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
#include <filesystem>
#include <span>
#include <vector>

namespace screening {

/// Reads a whole file. Throws FileNotFound or IoError.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes `bytes` to `path` via a sibling temporary and rename. Throws IoError.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace screening
