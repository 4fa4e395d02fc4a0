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
#include <stdexcept>
#include <string>

namespace screening {

/// Broad failure class; the CLI maps it to a process exit code.
enum class ErrorCategory {
  usage,    // exit 1
  data,     // exit 2
  numeric,  // exit 3
};

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ErrorCategory category = ErrorCategory::data)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

int exit_code_for(ErrorCategory category) noexcept;

#define SCREENING_DATA_ERROR(Name)                                 \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(what) {}        \
  }

SCREENING_DATA_ERROR(DecodeError);
SCREENING_DATA_ERROR(BackboneShapeError);
SCREENING_DATA_ERROR(BackboneMismatch);
SCREENING_DATA_ERROR(SplitError);
SCREENING_DATA_ERROR(LengthMismatch);
SCREENING_DATA_ERROR(EmptyInput);
SCREENING_DATA_ERROR(SingleClassError);
SCREENING_DATA_ERROR(VersionError);
SCREENING_DATA_ERROR(ShapeError);

#undef SCREENING_DATA_ERROR

/// A file could not be read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// The path does not name a readable regular file.
class FileNotFound : public IoError {
 public:
  explicit FileNotFound(const std::string& what) : IoError(what) {}
};

/// Malformed file content. Carries the byte offset where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A backbone evaluation failed. `index` is set when raised from a batch call.
class InferenceError : public Error {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  explicit InferenceError(const std::string& what, std::size_t index = kNoIndex)
      : Error(index == kNoIndex ? what : "element " + std::to_string(index) + ": " + what),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Non-finite value inside the head network.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, ErrorCategory::numeric) {}
};

}  // namespace screening
