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

#include <bit>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "dataset_files.hpp"
#include "json.hpp"
#include "screening/backbone.hpp"
#include "screening/embedding_cache.hpp"
#include "screening/errors.hpp"
#include "screening/file_io.hpp"
#include "screening/image.hpp"
#include "screening/metrics.hpp"
#include "screening/model_io.hpp"
#include "screening/random.hpp"
#include "screening/screening.hpp"
#include "screening/service.hpp"
#include "screening/trainer.hpp"

namespace fs = std::filesystem;
using namespace screening;

namespace {

struct ExtractArgs {
  std::string images, labels, backbone, out;
  std::size_t augment = 4;
  std::uint64_t seed = 0;
};

struct SplitArgs {
  std::size_t train_count = 447;
  std::size_t val_count = 50;
  std::uint64_t seed = 0;
  bool no_stratify = false;
  bool group_by_source = false;

  SplitSpec spec() const {
    SplitSpec s{train_count, val_count, seed};
    s.stratified = !no_stratify;
    s.group_by_source = group_by_source;
    return s;
  }
};

struct TrainArgs {
  std::string cache, out;
  SplitArgs split;
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double dropout = 0.5;
  double threshold = 0.5;
  std::string optimizer = "adam";
};

struct EvaluateArgs {
  std::string cache, model;
  std::optional<double> threshold;
  SplitArgs split;
  bool validation_only = false;
};

struct PredictArgs {
  std::string image, backbone, model;
  bool strict = false;
};

struct ServeArgs {
  std::string backbone, model, listen;
  bool strict = false;
};

void append_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint64_t leading_u64(const Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return v;
}

// Augmented records are keyed by what determines them: the source image,
// the transform drawn and the backbone.
Digest augmentation_key(const Digest& image, const AugmentDraw& d, const Digest& backbone) {
  std::vector<std::uint8_t> buf(image.begin(), image.end());
  for (double v : {d.rotation_degrees, d.shift_x, d.shift_y, d.brightness, d.contrast}) append_f64(buf, v);
  buf.insert(buf.end(), backbone.begin(), backbone.end());
  return sha256(buf);
}

int run_extract(const ExtractArgs& a) {
  const Backbone backbone = open_backbone(a.backbone);
  const auto rows = cli::read_labels_csv(a.labels);
  const fs::path cache(a.out);

  // Augmented embeddings from an earlier run with the same backbone are reused.
  std::map<Digest, Embedding> previous;
  if (const auto old = cli::read_cache_meta(cache);
      old && old->backbone_digest == backbone.digest() && fs::exists(cli::augmented_path(cache))) {
    for (auto& r : read_embedding_cache(cli::augmented_path(cache))) previous.emplace(r.source_digest, r.embedding);
  }

  cli::CacheMeta meta;
  meta.backbone_version = backbone.model_version();
  meta.backbone_digest = backbone.digest();
  meta.normalization_id = std::string(kNormalizationId);
  meta.augment = a.augment;
  meta.seed = a.seed;

  std::vector<CacheRecord> records;
  std::vector<CacheRecord> augmented;
  std::size_t reused = 0;
  const AugmentSpec spec;
  const bool interactive = ::isatty(STDERR_FILENO) != 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto bytes = read_file(fs::path(a.images) / row.filename);
    const Digest digest = sha256(bytes);
    RasterImage img;
    try {
      img = decode_image(bytes);
    } catch (const DecodeError& e) {
      throw DecodeError(row.filename + ": " + e.what());
    }
    records.push_back({digest, row.label, embed(backbone, preprocess(img))});
    meta.files.push_back(row.filename);
    meta.sources.push_back(row.source.empty() ? row.filename : row.source);

    for (std::size_t k = 0; k < a.augment; ++k) {
      const auto draw = draw_augmentation(spec, img.height(), img.width(),
                                          derive_seed({a.seed, leading_u64(digest), k}));
      const Digest key = augmentation_key(digest, draw, backbone.digest());
      auto hit = previous.find(key);
      if (hit != previous.end()) {
        augmented.push_back({key, row.label, hit->second});
        ++reused;
      } else {
        augmented.push_back({key, row.label, embed(backbone, preprocess(apply_augmentation(img, draw)))});
      }
      meta.augmented_parent.push_back(i);
    }
    if (interactive) std::cerr << "\rembedded " << i + 1 << "/" << rows.size() << std::flush;
  }
  if (interactive) std::cerr << "\n";
  std::cerr << "embedded " << rows.size() << " images\n";

  write_embedding_cache(cache, records);
  if (a.augment > 0) write_embedding_cache(cli::augmented_path(cache), augmented);
  cli::write_cache_meta(cache, meta);

  nlohmann::ordered_json j;
  j["records"] = records.size();
  j["augmented"] = augmented.size();
  j["augmented_reused"] = reused;
  j["backbone_version"] = backbone.model_version();
  std::cout << j.dump(2) << "\n";
  return 0;
}

nlohmann::ordered_json history_json(const TrainHistory& h) {
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    epochs.push_back({{"epoch", e + 1},
                      {"mean_loss", h.epochs[e].mean_loss},
                      {"train_accuracy", h.epochs[e].train_accuracy},
                      {"validation_accuracy", h.epochs[e].validation_accuracy}});
  }
  return epochs;
}

int run_train(const TrainArgs& a) {
  const auto data = cli::load_dataset(a.cache);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.dropout_rate = a.dropout;
  cfg.seed = a.split.seed;
  cfg.optimizer.learning_rate = a.lr;
  cfg.optimizer.kind = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
  cfg.augment_multiplier = data.meta ? data.meta->augment : 0;

  ModelMetadata meta;
  meta.dropout_rate = a.dropout;
  meta.threshold = a.threshold;
  if (data.meta) {
    meta.backbone_digest = data.meta->backbone_digest;
    meta.normalization_id = data.meta->normalization_id;
  } else {
    std::cerr << "warning: " << cli::meta_path(a.cache).string()
              << " not found; the model will not record a backbone digest\n";
  }

  const FitResult result = fit(data.examples, a.split.spec(), cfg, data.augmented,
                               [&](std::size_t e, const EpochRecord& r) {
                                 std::fprintf(stderr, "epoch %zu/%zu  loss %.4f  train acc %.4f  val acc %.4f\n",
                                              e + 1, cfg.epochs, r.mean_loss, r.train_accuracy,
                                              r.validation_accuracy);
                               });
  save_model(result.params, meta, a.out);
  const auto saved = load_model(a.out);

  nlohmann::ordered_json j;
  j["model"] = a.out;
  j["model_version"] = saved.model_version;
  j["best_epoch"] = result.history.best_epoch ? nlohmann::ordered_json(*result.history.best_epoch + 1)
                                              : nlohmann::ordered_json(nullptr);
  j["train_examples"] = result.split.train.size();
  j["validation_examples"] = result.split.validation.size();
  j["history"] = history_json(result.history);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto data = cli::load_dataset(a.cache);
  const LoadedModel model = load_model(a.model);
  if (data.meta && data.meta->backbone_digest != model.metadata.backbone_digest) {
    std::cerr << "warning: cache and model were produced with different backbones\n";
  }
  std::vector<LabeledExample> examples;
  if (a.validation_only) {
    examples = split_dataset(data.examples, a.split.spec()).validation;
  } else {
    examples = data.examples;
  }
  if (examples.empty()) throw EmptyInput("nothing to evaluate");
  const EvalReport report = evaluate(model.params, examples, a.threshold.value_or(model.metadata.threshold));
  std::cout << to_json(report) << "\n";
  return 0;
}

int run_predict(const PredictArgs& a) {
  const Backbone backbone = open_backbone(a.backbone);
  const LoadedModel model = load_model(a.model);
  const auto bytes = read_file(a.image);
  const auto result = run_screening(bytes, backbone, model, {.strict_backbone = a.strict});
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << to_json(result, 2) << "\n";
  return 0;
}

int run_serve(const ServeArgs& a) {
  const auto [host, port] = parse_listen_address(a.listen);
  const Backbone backbone = open_backbone(a.backbone);
  ScreeningService service(backbone, a.model, {.strict_backbone = a.strict});
  try {
    std::cerr << "loaded model " << service.reload() << "\n";
  } catch (const Error& e) {
    std::cerr << "warning: no model loaded (" << e.what() << "); /screen answers 503 until /reload\n";
  }

  // Signals are taken by a dedicated thread so stop() runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    service.stop();
  });
  const int bound = service.start(host, port);
  std::cerr << "listening on " << host << ":" << bound << "\n";
  waiter.join();
  return 0;
}

void add_split_options(CLI::App* cmd, SplitArgs& s, bool required) {
  auto* t = cmd->add_option("--train-count", s.train_count, "Training examples (originals)");
  auto* v = cmd->add_option("--val-count", s.val_count, "Validation examples");
  if (required) {
    t->required();
    v->required();
  }
  cmd->add_option("--seed", s.seed, "Split and training seed");
  cmd->add_flag("--no-stratify", s.no_stratify, "Plain random split");
  cmd->add_flag("--group-by-source", s.group_by_source, "Keep each source id on one side");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Handwriting screening toolkit"};
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Embed labelled images into a cache");
  extract->add_option("--images", ex.images, "Image directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--labels", ex.labels, "CSV with header filename,label[,source]")->required();
  extract->add_option("--backbone", ex.backbone, "ONNX file or mock:SEED")->required();
  extract->add_option("--out", ex.out, "Cache file to write")->required();
  extract->add_option("--augment", ex.augment, "Augmented copies per image")->capture_default_str();
  extract->add_option("--seed", ex.seed, "Augmentation seed");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the head on a cache");
  train->add_option("--cache", tr.cache, "Embedding cache from extract")->required();
  train->add_option("--out", tr.out, "Model artifact to write")->required();
  add_split_options(train, tr.split, true);
  train->add_option("--epochs", tr.epochs, "Passes over the training side")->required();
  train->add_option("--batch-size", tr.batch_size, "Examples per update")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--dropout", tr.dropout, "Dropout rate on hidden layers")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  train->add_option("--threshold", tr.threshold, "Decision threshold stored in the model")->capture_default_str();
  train->add_option("--optimizer", tr.optimizer, "Update rule")->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model on a cache");
  evaluate_cmd->add_option("--cache", ev.cache, "Embedding cache from extract")->required();
  evaluate_cmd->add_option("--model", ev.model, "Model artifact")->required();
  evaluate_cmd->add_option("--threshold", ev.threshold, "Defaults to the model's threshold");
  evaluate_cmd->add_flag("--validation-only", ev.validation_only, "Score only the validation side of the split");
  add_split_options(evaluate_cmd, ev.split, false);

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Screen one image");
  predict->add_option("--image", pr.image, "PNG or JPEG file")->required();
  predict->add_option("--backbone", pr.backbone, "ONNX file or mock:SEED")->required();
  predict->add_option("--model", pr.model, "Model artifact")->required();
  predict->add_flag("--strict", pr.strict, "Fail when the backbone differs from the model's");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP screening service");
  serve->add_option("--backbone", sv.backbone, "ONNX file or mock:SEED")->required();
  serve->add_option("--model", sv.model, "Model artifact, reread on POST /reload")->required();
  serve->add_option("--listen", sv.listen, "HOST:PORT")->required();
  serve->add_flag("--strict", sv.strict, "Refuse models trained on another backbone");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code_for(ErrorCategory::usage);
  }

  try {
    if (*extract) return run_extract(ex);
    if (*train) return run_train(tr);
    if (*evaluate_cmd) return run_evaluate(ev);
    if (*predict) return run_predict(pr);
    if (*serve) return run_serve(sv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(ErrorCategory::data);
  }
  return exit_code_for(ErrorCategory::usage);
}
