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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "screening/dataset.hpp"
#include "screening/head.hpp"
#include "screening/label.hpp"

namespace screening {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// A point is predicted positive iff score >= threshold.
/// Throws LengthMismatch or EmptyInput.
ConfusionMatrix confusion_matrix(std::span<const double> scores, std::span<const Label> labels,
                                 double threshold);

/// nullopt marks an undefined metric (zero denominator); never a silent 0.
struct ClassificationMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;  // F1
  double accuracy = 0.0;
};

/// Throws EmptyInput when the matrix is empty.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

/// Starts at (0,0), ends at (1,1), both coordinates non-decreasing.
using RocCurve = std::vector<RocPoint>;

/// Threshold sweep over distinct scores, highest first; tied scores move as
/// one step. Throws SingleClassError unless both classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels);

/// Trapezoidal area under the curve.
double auc_trapezoid(const RocCurve& curve);

/// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Independent check on the ROC route.
double auc_rank_oracle(std::span<const double> scores, std::span<const Label> labels);

struct EvalReport {
  std::optional<double> auc;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_score;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  double threshold = 0.5;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// All five metrics from raw scores. AUC is undefined (nullopt) when only
/// one class is present.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                           double threshold);

/// Inference-mode forward over `examples`, then evaluate_scores().
EvalReport evaluate(const HeadParams& params, std::span<const LabeledExample> examples,
                    double threshold = 0.5);

/// Inference-mode probabilities, in order.
std::vector<double> predict_probabilities(const HeadParams& params,
                                          std::span<const LabeledExample> examples);

/// JSON document with keys auc, precision, recall, f_score, accuracy,
/// threshold and confusion{tp,fp,fn,tn}; undefined metrics are null.
std::string to_json(const EvalReport& report, int indent = 2);

}  // namespace screening
