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
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "screening/backbone.hpp"
#include "screening/model_io.hpp"
#include "screening/screening.hpp"

namespace screening {

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// HTTP front end for run_screening().
///
///   POST /screen   image/png or image/jpeg body -> 200 ScreeningResult JSON,
///                  400 undecodable image, 415 other content type,
///                  503 no model loaded
///   GET  /healthz  -> 200 {"status", "model_version"}
///   POST /reload   re-reads the artifact path and swaps it in atomically
///
/// Requests snapshot the current model pointer, so each one sees exactly
/// one artifact version even while a reload is in flight.
class ScreeningService {
 public:
  ScreeningService(Backbone backbone, std::filesystem::path model_path,
                   ScreeningOptions options = {});
  ~ScreeningService();

  ScreeningService(const ScreeningService&) = delete;
  ScreeningService& operator=(const ScreeningService&) = delete;

  /// Loads the artifact and swaps it in. On failure the previous model
  /// stays active and the error propagates. Returns the new model_version.
  std::string reload();
  void install(std::shared_ptr<const LoadedModel> model);
  std::shared_ptr<const LoadedModel> model() const;

  HttpReply handle_screen(std::span<const std::uint8_t> body, std::string_view content_type) const;
  HttpReply handle_health() const;
  HttpReply handle_reload();

  /// Serves on a background thread. Port 0 picks a free port; returns the
  /// bound port. Throws IoError when binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  struct Http;

  Backbone backbone_;
  std::filesystem::path model_path_;
  ScreeningOptions options_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const LoadedModel> model_;
  std::mutex reload_mutex_;
  std::unique_ptr<Http> http_;
  std::thread thread_;
};

/// Splits "host:port". Throws Error (usage) on malformed input.
std::pair<std::string, int> parse_listen_address(std::string_view address);

}  // namespace screening
