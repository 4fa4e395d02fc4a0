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

#include "screening/service.hpp"

#include <charconv>

#include "httplib.h"
#include "json.hpp"
#include "screening/errors.hpp"

namespace screening {

struct ScreeningService::Http {
  httplib::Server server;
};

namespace {

HttpReply json_error(int status, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = message;
  return {status, j.dump(), "application/json"};
}

std::string_view media_type(std::string_view content_type) {
  const auto semi = content_type.find(';');
  auto t = content_type.substr(0, semi);
  while (!t.empty() && t.back() == ' ') t.remove_suffix(1);
  return t;
}

}  // namespace

ScreeningService::ScreeningService(Backbone backbone, std::filesystem::path model_path,
                                   ScreeningOptions options)
    : backbone_(std::move(backbone)),
      model_path_(std::move(model_path)),
      options_(options),
      http_(std::make_unique<Http>()) {
  auto& s = http_->server;
  s.Post("/screen", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle_screen(
        std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()),
        req.get_header_value("Content-Type"));
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });
  s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    const auto reply = handle_health();
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });
  s.Post("/reload", [this](const httplib::Request&, httplib::Response& res) {
    const auto reply = handle_reload();
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });
}

ScreeningService::~ScreeningService() { stop(); }

std::string ScreeningService::reload() {
  std::lock_guard reload_lock(reload_mutex_);
  auto loaded = std::make_shared<const LoadedModel>(load_model(model_path_));
  if (options_.strict_backbone && loaded->metadata.backbone_digest != backbone_.digest()) {
    throw BackboneMismatch("model artifact was trained against a different backbone");
  }
  std::string version = loaded->model_version;
  install(std::move(loaded));
  return version;
}

void ScreeningService::install(std::shared_ptr<const LoadedModel> model) {
  std::lock_guard lock(model_mutex_);
  model_ = std::move(model);
}

std::shared_ptr<const LoadedModel> ScreeningService::model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

HttpReply ScreeningService::handle_screen(std::span<const std::uint8_t> body,
                                          std::string_view content_type) const {
  const auto snapshot = model();
  if (!snapshot) return json_error(503, "no model loaded");
  const auto type = media_type(content_type);
  if (!type.empty() && type != "image/png" && type != "image/jpeg") {
    return json_error(415, "content type must be image/png or image/jpeg");
  }
  try {
    const auto result = run_screening(body, backbone_, *snapshot, options_);
    return {200, to_json(result), "application/json"};
  } catch (const DecodeError& e) {
    return json_error(400, e.what());
  } catch (const BackboneMismatch& e) {
    return json_error(409, e.what());
  } catch (const std::exception& e) {
    return json_error(500, e.what());
  }
}

HttpReply ScreeningService::handle_health() const {
  const auto snapshot = model();
  nlohmann::ordered_json j;
  j["status"] = snapshot ? "ok" : "no_model";
  j["model_version"] = snapshot ? nlohmann::json(snapshot->model_version) : nlohmann::json(nullptr);
  j["backbone_version"] = backbone_.model_version();
  return {200, j.dump(), "application/json"};
}

HttpReply ScreeningService::handle_reload() {
  try {
    const auto version = reload();
    nlohmann::ordered_json j;
    j["model_version"] = version;
    return {200, j.dump(), "application/json"};
  } catch (const std::exception& e) {
    return json_error(500, std::string("reload failed: ") + e.what());
  }
}

int ScreeningService::start(const std::string& host, int port) {
  auto& s = http_->server;
  int bound = port;
  if (port == 0) {
    bound = s.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
  } else if (!s.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

void ScreeningService::serve(const std::string& host, int port) {
  auto& s = http_->server;
  if (!s.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  s.listen_after_bind();
}

void ScreeningService::stop() {
  if (http_) http_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::pair<std::string, int> parse_listen_address(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == address.size()) {
    throw Error("listen address must look like HOST:PORT", ErrorCategory::usage);
  }
  int port = 0;
  const auto digits = address.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw Error("invalid port in listen address", ErrorCategory::usage);
  }
  std::string host(address.substr(0, colon));
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return {host, port};
}

}  // namespace screening
