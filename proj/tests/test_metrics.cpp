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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "json.hpp"
#include "screening/errors.hpp"
#include "screening/metrics.hpp"
#include "support/synthetic.hpp"

namespace screening {
namespace {

std::vector<Label> labels_of(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(x ? Label::positive : Label::negative);
  return out;
}

struct Instance {
  std::vector<double> scores;
  std::vector<Label> labels;
};

// n <= 50, both classes present; tie-heavy instances draw from a few levels.
Instance random_instance(std::mt19937_64& rng, bool ties) {
  Instance in;
  const std::size_t n = 2 + rng() % 49;
  for (std::size_t i = 0; i < n; ++i) {
    in.labels.push_back(rng() % 3 == 0 ? Label::positive : Label::negative);
    in.scores.push_back(ties ? static_cast<double>(rng() % 4) / 4.0
                             : std::ldexp(static_cast<double>(rng() >> 11), -53));
  }
  in.labels[0] = Label::positive;
  in.labels[1] = Label::negative;
  std::shuffle(in.labels.begin(), in.labels.end(), rng);
  return in;
}

TEST(Confusion, TwoPoints) {
  const ConfusionMatrix cm = confusion_matrix(std::vector{0.9, 0.1}, labels_of({1, 0}), 0.5);
  EXPECT_EQ(cm, (ConfusionMatrix{1, 0, 0, 1}));
}

TEST(Confusion, BoundaryIsPositive) {
  const ConfusionMatrix cm = confusion_matrix(std::vector{0.5}, labels_of({0}), 0.5);
  EXPECT_EQ(cm.fp, 1u);
}

TEST(Confusion, HandTally) {
  const std::vector<double> s{0.6, 0.6, 0.4, 0.2, 0.7, 0.1, 0.3, 0.2, 0.55, 0.05};
  const ConfusionMatrix cm = confusion_matrix(s, labels_of({1, 0, 1, 0, 1, 0, 0, 0, 1, 0}), 0.5);
  EXPECT_EQ(cm, (ConfusionMatrix{3, 1, 1, 5}));
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion_matrix(std::vector{0.1, 0.2}, labels_of({1}), 0.5), LengthMismatch);
  EXPECT_THROW(confusion_matrix({}, {}, 0.5), EmptyInput);
}

TEST(Classification, HandExample) {
  const auto m = classification_metrics({3, 1, 1, 5});
  EXPECT_DOUBLE_EQ(*m.precision, 0.75);
  EXPECT_DOUBLE_EQ(*m.recall, 0.75);
  EXPECT_DOUBLE_EQ(*m.f_score, 0.75);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
}

TEST(Classification, Perfect) {
  const auto m = classification_metrics({4, 0, 0, 6});
  EXPECT_EQ(*m.precision, 1.0);
  EXPECT_EQ(*m.recall, 1.0);
  EXPECT_EQ(*m.f_score, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Classification, UndefinedMarkers) {
  const auto none_predicted = classification_metrics({0, 0, 3, 7});
  EXPECT_FALSE(none_predicted.precision.has_value());
  EXPECT_EQ(*none_predicted.recall, 0.0);
  EXPECT_FALSE(none_predicted.f_score.has_value());

  const auto no_positives = classification_metrics({0, 2, 0, 5});
  EXPECT_EQ(*no_positives.precision, 0.0);
  EXPECT_FALSE(no_positives.recall.has_value());

  const auto both_zero = classification_metrics({0, 2, 3, 5});
  EXPECT_EQ(*both_zero.precision, 0.0);
  EXPECT_EQ(*both_zero.recall, 0.0);
  EXPECT_FALSE(both_zero.f_score.has_value());

  EXPECT_THROW(classification_metrics({}), EmptyInput);
}

TEST(Classification, HarmonicMeanOfReportedFigures) {
  // Precision 0.94 and recall 0.89 give F1 = 0.9143, which rounds to 0.91.
  const double p = 0.94, r = 0.89;
  const double f = 2 * p * r / (p + r);
  EXPECT_NEAR(f, 0.914317, 1e-6);
  EXPECT_EQ(std::round(f * 100) / 100, 0.91);
}

TEST(Classification, AgreesWithBruteForceCounting) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = random_instance(rng, trial % 2 == 0);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0, in.scores[rng() % in.scores.size()]}) {
      const auto m = classification_metrics(confusion_matrix(in.scores, in.labels, t));
      double tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < in.scores.size(); ++i) {
        const bool pred = !(in.scores[i] < t);
        const bool pos = in.labels[i] == Label::positive;
        tp += pred && pos;
        fp += pred && !pos;
        fn += !pred && pos;
        tn += !pred && !pos;
      }
      ASSERT_DOUBLE_EQ(m.accuracy, (tp + tn) / (tp + fp + fn + tn));
      ASSERT_EQ(m.precision.has_value(), tp + fp > 0);
      if (m.precision) ASSERT_DOUBLE_EQ(*m.precision, tp / (tp + fp));
      ASSERT_EQ(m.recall.has_value(), tp + fn > 0);
      if (m.recall) ASSERT_DOUBLE_EQ(*m.recall, tp / (tp + fn));
      if (m.f_score) ASSERT_NEAR(*m.f_score, 2 * tp / (2 * tp + fp + fn), 1e-15);
    }
  }
}

TEST(Roc, HandSweep) {
  const RocCurve c = roc_curve(std::vector{0.9, 0.8, 0.3, 0.2}, labels_of({1, 1, 0, 0}));
  EXPECT_EQ(c, (RocCurve{{0, 0}, {0, 0.5}, {0, 1}, {0.5, 1}, {1, 1}}));
  EXPECT_EQ(auc_trapezoid(c), 1.0);
}

TEST(Roc, AllTiesIsDiagonal) {
  const RocCurve c = roc_curve(std::vector{0.3, 0.3, 0.3}, labels_of({1, 0, 0}));
  EXPECT_EQ(c, (RocCurve{{0, 0}, {1, 1}}));
  EXPECT_EQ(auc_trapezoid(c), 0.5);
  EXPECT_EQ(auc_rank_oracle(std::vector{0.3, 0.3, 0.3}, labels_of({1, 0, 0})), 0.5);
}

TEST(Roc, ThreeOfFourPairs) {
  // Positives 0.4, 0.2 against negatives 0.3, 0.1: only (0.2, 0.3) is misordered.
  const std::vector<double> s{0.4, 0.2, 0.3, 0.1};
  const auto y = labels_of({1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(auc_trapezoid(roc_curve(s, y)), 0.75);
  EXPECT_DOUBLE_EQ(auc_rank_oracle(s, y), 0.75);
}

TEST(Roc, InterleavedLabelsFullyOrdered) {
  // Positives 0.4, 0.3 both outrank negatives 0.2, 0.1.
  const std::vector<double> s{0.4, 0.2, 0.3, 0.1};
  const auto y = labels_of({1, 0, 1, 0});
  EXPECT_EQ(auc_trapezoid(roc_curve(s, y)), 1.0);
  EXPECT_EQ(auc_rank_oracle(s, y), 1.0);
}

TEST(Roc, PerfectOrdering) {
  EXPECT_EQ(auc_rank_oracle(std::vector{0.9, 0.1}, labels_of({1, 0})), 1.0);
  EXPECT_EQ(auc_rank_oracle(std::vector{0.1, 0.9}, labels_of({1, 0})), 0.0);
}

TEST(Roc, SingleClassRejected) {
  EXPECT_THROW(roc_curve(std::vector{0.1, 0.2}, labels_of({1, 1})), SingleClassError);
  EXPECT_THROW(auc_rank_oracle(std::vector{0.1, 0.2}, labels_of({0, 0})), SingleClassError);
}

TEST(Roc, TrapezoidEqualsRankOracleProperty) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = random_instance(rng, trial % 3 != 0);
    const RocCurve c = roc_curve(in.scores, in.labels);
    ASSERT_EQ(c.front(), (RocPoint{0, 0}));
    ASSERT_EQ(c.back(), (RocPoint{1, 1}));
    for (std::size_t i = 1; i < c.size(); ++i) {
      ASSERT_GE(c[i].fpr, c[i - 1].fpr);
      ASSERT_GE(c[i].tpr, c[i - 1].tpr);
    }
    ASSERT_NEAR(auc_trapezoid(c), auc_rank_oracle(in.scores, in.labels), 1e-12) << "trial " << trial;
  }
}

TEST(Roc, PermutationAndMonotoneInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng, trial % 2 == 0);
    const EvalReport base = evaluate_scores(in.scores, in.labels, 0.5);

    std::vector<std::size_t> perm(in.scores.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance shuffled;
    for (std::size_t i : perm) {
      shuffled.scores.push_back(in.scores[i]);
      shuffled.labels.push_back(in.labels[i]);
    }
    const EvalReport permuted = evaluate_scores(shuffled.scores, shuffled.labels, 0.5);
    ASSERT_EQ(permuted.confusion, base.confusion);
    ASSERT_NEAR(*permuted.auc, *base.auc, 1e-12);

    std::vector<double> squashed;
    for (double s : in.scores) squashed.push_back(std::exp(3.0 * s) - 7.0);
    ASSERT_EQ(roc_curve(squashed, in.labels), roc_curve(in.scores, in.labels));
  }
}

TEST(Report, AucMatchesCurve) {
  const std::vector<double> s{0.7, 0.2, 0.9, 0.4, 0.4};
  const auto y = labels_of({1, 0, 1, 0, 1});
  const EvalReport r = evaluate_scores(s, y, 0.5);
  EXPECT_EQ(*r.auc, auc_trapezoid(roc_curve(s, y)));
  EXPECT_EQ(r.threshold, 0.5);
}

TEST(Report, SingleClassLeavesAucUndefined) {
  const EvalReport r = evaluate_scores(std::vector{0.7, 0.2}, labels_of({0, 0}), 0.5);
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_EQ(r.accuracy, 0.5);
}

TEST(Report, ZeroModelPredictsAllPositive) {
  const auto data = testing::cluster_dataset(40, 7, 3, 0.5);
  const EvalReport r = evaluate(HeadParams::zeros(), data, 0.5);
  EXPECT_EQ(r.confusion.tp + r.confusion.fp, 40u);
  EXPECT_DOUBLE_EQ(r.accuracy, 7.0 / 40.0);
  EXPECT_EQ(*r.auc, 0.5);
}

TEST(Report, JsonShape) {
  EvalReport r;
  r.auc = 0.75;
  r.precision = std::nullopt;
  r.recall = 0.0;
  r.accuracy = 0.7;
  r.confusion = {0, 0, 3, 7};
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j["auc"], 0.75);
  EXPECT_TRUE(j["precision"].is_null());
  EXPECT_TRUE(j["f_score"].is_null());
  EXPECT_EQ(j["recall"], 0.0);
  EXPECT_EQ(j["accuracy"], 0.7);
  EXPECT_EQ(j["threshold"], 0.5);
  EXPECT_EQ(j["confusion"]["fn"], 3);
  EXPECT_EQ(j["confusion"]["tn"], 7);
  EXPECT_EQ(j.size(), 7u);
}

}  // namespace
}  // namespace screening
