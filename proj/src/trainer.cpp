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

#include "screening/trainer.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <unordered_map>

#include "screening/errors.hpp"
#include "screening/metrics.hpp"
#include "screening/random.hpp"

namespace screening {

namespace {

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Validation positives proportional to prevalence, rounded half up.
std::size_t proportional(std::size_t cls, std::size_t val, std::size_t n) {
  return (2 * cls * val + n) / (2 * n);
}

struct Group {
  std::vector<std::size_t> members;
  std::size_t positives = 0;
};

SplitIndices split_by_group(std::span<const LabeledExample> examples, const SplitSpec& spec,
                            std::size_t positives, std::mt19937_64& rng) {
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto [it, inserted] = index.emplace(examples[i].source_id, groups.size());
    if (inserted) groups.emplace_back();
    Group& g = groups[it->second];
    g.members.push_back(i);
    if (examples[i].label == Label::positive) ++g.positives;
  }
  shuffle(groups, rng);

  const std::size_t target_pos =
      spec.stratified ? proportional(positives, spec.val_count, examples.size()) : 0;
  std::vector<bool> in_val(groups.size(), false);
  std::size_t val_size = 0, val_pos = 0;
  auto take = [&](std::size_t gi) {
    in_val[gi] = true;
    val_size += groups[gi].members.size();
    val_pos += groups[gi].positives;
  };
  if (spec.stratified) {
    // Positive-bearing groups first, up to the positive quota.
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const Group& g = groups[gi];
      if (g.positives == 0 || val_pos >= target_pos) continue;
      if (val_size + g.members.size() <= spec.val_count && val_pos + g.positives <= target_pos + 1) {
        take(gi);
      }
    }
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const Group& g = groups[gi];
      if (in_val[gi] || g.positives != 0) continue;
      if (val_size + g.members.size() <= spec.val_count) take(gi);
    }
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    if (!in_val[gi] && val_size + groups[gi].members.size() <= spec.val_count) take(gi);
  }
  if (val_size != spec.val_count) {
    throw SplitError("cannot reach a validation set of exactly " + std::to_string(spec.val_count) +
                     " examples using whole source groups");
  }
  SplitIndices out;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& dst = in_val[gi] ? out.validation : out.train;
    dst.insert(dst.end(), groups[gi].members.begin(), groups[gi].members.end());
  }
  return out;
}

}  // namespace

SplitIndices split_indices(std::span<const LabeledExample> examples, const SplitSpec& spec) {
  const std::size_t n = examples.size();
  if (spec.train_count + spec.val_count != n) {
    throw SplitError("split sizes " + std::to_string(spec.train_count) + " + " +
                     std::to_string(spec.val_count) + " do not add up to the dataset size " +
                     std::to_string(n));
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    (examples[i].label == Label::positive ? pos : neg).push_back(i);
  }
  std::mt19937_64 rng(derive_seed({spec.seed, 0x5b117ULL}));

  SplitIndices out;
  if (spec.group_by_source) {
    out = split_by_group(examples, spec, pos.size(), rng);
  } else if (!spec.stratified) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    shuffle(all, rng);
    out.validation.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.val_count));
    out.train.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.val_count), all.end());
  } else {
    if (spec.val_count == 0 || spec.train_count == 0) {
      throw SplitError("stratified split needs both sides non-empty");
    }
    // Each class needs at least one member on each side.
    if (pos.size() < 2 || neg.size() < 2) {
      throw SplitError("stratified split infeasible: " + std::to_string(pos.size()) +
                       " positives and " + std::to_string(neg.size()) +
                       " negatives cannot populate both sides");
    }
    const std::size_t lo =
        spec.val_count + 1 > neg.size() ? spec.val_count + 1 - neg.size() : std::size_t{1};
    const std::size_t hi = std::min(pos.size() - 1, spec.val_count - 1);
    if (std::max<std::size_t>(lo, 1) > hi) {
      throw SplitError("stratified split infeasible for the requested sizes");
    }
    const std::size_t val_pos =
        std::clamp(proportional(pos.size(), spec.val_count, n), std::max<std::size_t>(lo, 1), hi);
    const std::size_t val_neg = spec.val_count - val_pos;
    shuffle(pos, rng);
    shuffle(neg, rng);
    out.validation.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(val_pos));
    out.validation.insert(out.validation.end(), neg.begin(),
                          neg.begin() + static_cast<std::ptrdiff_t>(val_neg));
    out.train.assign(pos.begin() + static_cast<std::ptrdiff_t>(val_pos), pos.end());
    out.train.insert(out.train.end(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg), neg.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

DatasetSplit split_dataset(std::span<const LabeledExample> examples, const SplitSpec& spec) {
  const auto idx = split_indices(examples, spec);
  DatasetSplit out;
  out.train.reserve(idx.train.size());
  out.validation.reserve(idx.validation.size());
  for (auto i : idx.train) out.train.push_back(examples[i]);
  for (auto i : idx.validation) out.validation.push_back(examples[i]);
  return out;
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
  return derive_seed({run_seed, 0xe90cULL, epoch});
}

EpochStats train_epoch(HeadParams& params, OptimizerState& state,
                       std::span<const LabeledExample> train, const TrainConfig& cfg,
                       std::uint64_t epoch_seed) {
  if (train.empty()) throw EmptyInput("training set is empty");
  if (cfg.batch_size == 0) throw Error("batch size must be at least 1", ErrorCategory::usage);
  EpochStats stats;
  stats.order.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) stats.order[i] = i;
  std::mt19937_64 rng(derive_seed({epoch_seed, 1}));
  shuffle(stats.order, rng);

  const auto dropout = DropoutSpec::train(cfg.dropout_rate);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<const Embedding*> inputs;
  std::vector<Label> labels;
  std::vector<std::uint64_t> seeds;
  for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(start + cfg.batch_size, train.size());
    inputs.clear();
    labels.clear();
    seeds.clear();
    for (std::size_t pos = start; pos < end; ++pos) {
      const auto& ex = train[stats.order[pos]];
      inputs.push_back(&ex.embedding);
      labels.push_back(ex.label);
      seeds.push_back(derive_seed({epoch_seed, 2, pos}));
    }
    const auto outcome = batch_gradient(params, inputs, labels, dropout, seeds);
    apply_update(params, outcome.mean_gradient, state);
    ++stats.updates;
    loss_sum += outcome.mean_loss * static_cast<double>(end - start);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool predicted = outcome.probabilities[i] >= 0.5;
      if (predicted == (labels[i] == Label::positive)) ++correct;
    }
  }
  if (!params.all_finite()) throw NumericError("parameters became non-finite during training");
  stats.mean_loss = loss_sum / static_cast<double>(train.size());
  stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
  return stats;
}

std::optional<std::size_t> select_best_epoch(std::span<const EpochRecord> epochs) {
  std::optional<std::size_t> best;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    if (!best || epochs[e].validation_accuracy > epochs[*best].validation_accuracy) best = e;
  }
  return best;
}

FitResult fit(std::span<const LabeledExample> dataset, const SplitSpec& spec,
              const TrainConfig& cfg, std::span<const AugmentedExample> augmented,
              const EpochCallback& on_epoch) {
  FitResult result;
  result.split = split_indices(dataset, spec);
  if (result.split.validation.empty()) throw SplitError("validation set must not be empty");
  if (result.split.train.empty()) throw SplitError("training set must not be empty");

  std::vector<bool> in_train(dataset.size(), false);
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  for (auto i : result.split.train) {
    in_train[i] = true;
    train.push_back(dataset[i]);
  }
  for (auto i : result.split.validation) validation.push_back(dataset[i]);
  for (const auto& aug : augmented) {
    if (aug.original_index >= dataset.size()) {
      throw SplitError("augmented example refers to missing original " +
                       std::to_string(aug.original_index));
    }
    if (in_train[aug.original_index]) train.push_back(aug.example);
  }

  HeadParams params = init_params(cfg.seed);
  OptimizerState state = OptimizerState::create(cfg.optimizer);
  result.params = params;

  std::optional<double> best_accuracy;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto stats = train_epoch(params, state, train, cfg, epoch_seed(cfg.seed, e));
    EpochRecord rec;
    rec.mean_loss = stats.mean_loss;
    rec.train_accuracy = stats.train_accuracy;
    rec.validation_accuracy = evaluate(params, validation, 0.5).accuracy;
    result.history.epochs.push_back(rec);
    if (!best_accuracy || rec.validation_accuracy > *best_accuracy) {
      best_accuracy = rec.validation_accuracy;
      result.history.best_epoch = e;
      result.params = params;
    }
    if (on_epoch) on_epoch(e, rec);
  }
  return result;
}

}  // namespace screening
