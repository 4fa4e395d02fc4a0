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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "screening/dataset.hpp"
#include "screening/head.hpp"

namespace screening {

struct SplitSpec {
  std::size_t train_count = 447;
  std::size_t val_count = 50;
  std::uint64_t seed = 0;
  /// Keep class proportions equal on both sides (within one example).
  bool stratified = true;
  /// Keep every source_id on one side of the split (best-effort stratification).
  bool group_by_source = false;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Throws SplitError on a size mismatch or infeasible stratification.
SplitIndices split_indices(std::span<const LabeledExample> examples, const SplitSpec& spec);

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
};

DatasetSplit split_dataset(std::span<const LabeledExample> examples, const SplitSpec& spec);

struct TrainConfig {
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double dropout_rate = 0.5;
  OptimizerConfig optimizer;
  /// Augmented copies per training image, consumed at extraction time.
  std::size_t augment_multiplier = 4;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::size_t updates = 0;
  /// Permutation of training indices in the order they were visited.
  std::vector<std::size_t> order;
};

/// One shuffled pass in mini-batches; the batch gradient is the mean of the
/// per-example gradients. Throws EmptyInput or NumericError.
EpochStats train_epoch(HeadParams& params, OptimizerState& state,
                       std::span<const LabeledExample> train, const TrainConfig& cfg,
                       std::uint64_t epoch_seed);

struct EpochRecord {
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Earliest epoch with the highest validation accuracy; empty if none ran.
  std::optional<std::size_t> best_epoch;
};

/// Earliest index of the maximum validation accuracy.
std::optional<std::size_t> select_best_epoch(std::span<const EpochRecord> epochs);

/// An augmented copy of dataset[original_index]; joins the training side
/// only when its original does.
struct AugmentedExample {
  std::size_t original_index = 0;
  LabeledExample example;
};

struct FitResult {
  HeadParams params;
  TrainHistory history;
  SplitIndices split;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochRecord&)>;

/// Splits, trains cfg.epochs epochs, scores validation accuracy at 0.5 in
/// inference mode after each, and returns the best epoch's parameters.
FitResult fit(std::span<const LabeledExample> dataset, const SplitSpec& spec,
              const TrainConfig& cfg, std::span<const AugmentedExample> augmented = {},
              const EpochCallback& on_epoch = {});

/// Seed used for epoch `epoch` of a run seeded with `run_seed`.
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

}  // namespace screening
