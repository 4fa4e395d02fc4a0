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

#include "screening/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

#include "screening/errors.hpp"

namespace screening {

namespace {

void check_inputs(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw LengthMismatch("scores (" + std::to_string(scores.size()) + ") and labels (" +
                         std::to_string(labels.size()) + ") differ in length");
  }
  if (scores.empty()) throw EmptyInput("metrics need at least one example");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const Label> labels) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::positive));
  return {pos, labels.size() - pos};
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const double> scores, std::span<const Label> labels,
                                 double threshold) {
  check_inputs(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == Label::positive;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyInput("confusion matrix is empty");
  ClassificationMetrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f_score = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  return m;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  check_inputs(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw SingleClassError("ROC needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]] == Label::positive) ++tp; else ++fp;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos)});
  }
  if (curve.back() != RocPoint{1.0, 1.0}) curve.push_back({1.0, 1.0});
  return curve;
}

double auc_trapezoid(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

double auc_rank_oracle(std::span<const double> scores, std::span<const Label> labels) {
  check_inputs(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw SingleClassError("AUC needs both classes present");
  // Counted in half-units so the sum stays an exact integer.
  std::uint64_t halves = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != Label::positive) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != Label::negative) continue;
      if (scores[i] > scores[j]) halves += 2;
      else if (scores[i] == scores[j]) halves += 1;
    }
  }
  return static_cast<double>(halves) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const Label> labels,
                           double threshold) {
  EvalReport r;
  r.threshold = threshold;
  r.confusion = confusion_matrix(scores, labels, threshold);
  const auto m = classification_metrics(r.confusion);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f_score = m.f_score;
  r.accuracy = m.accuracy;
  const auto [pos, neg] = class_counts(labels);
  if (pos > 0 && neg > 0) r.auc = auc_trapezoid(roc_curve(scores, labels));
  return r;
}

std::vector<double> predict_probabilities(const HeadParams& params,
                                          std::span<const LabeledExample> examples) {
  std::vector<double> scores;
  scores.reserve(examples.size());
  for (const auto& ex : examples) {
    scores.push_back(forward(params, ex.embedding, DropoutSpec::inference()).probability);
  }
  return scores;
}

EvalReport evaluate(const HeadParams& params, std::span<const LabeledExample> examples,
                    double threshold) {
  if (examples.empty()) throw EmptyInput("evaluate needs at least one example");
  const auto scores = predict_probabilities(params, examples);
  std::vector<Label> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(ex.label);
  return evaluate_scores(scores, labels, threshold);
}

std::string to_json(const EvalReport& report, int indent) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::ordered_json j;
  j["auc"] = opt(report.auc);
  j["precision"] = opt(report.precision);
  j["recall"] = opt(report.recall);
  j["f_score"] = opt(report.f_score);
  j["accuracy"] = report.accuracy;
  j["threshold"] = report.threshold;
  j["confusion"] = {{"tp", report.confusion.tp},
                    {"fp", report.confusion.fp},
                    {"fn", report.confusion.fn},
                    {"tn", report.confusion.tn}};
  return j.dump(indent);
}

}  // namespace screening
