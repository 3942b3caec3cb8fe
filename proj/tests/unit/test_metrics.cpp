// Copyright 2026 The Quintlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "quintlink/error.hpp"
#include "quintlink/metrics.hpp"

namespace quintlink {
namespace {

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    const auto cm = confusion(pred, truth);
    const auto c = testing::count_cells(truth, pred);
    EXPECT_EQ(cm, (ConfusionMatrix{std::uint64_t(c.tp), std::uint64_t(c.fn), std::uint64_t(c.fp),
                                   std::uint64_t(c.tn)}));
  }
}

TEST(Confusion, RejectsBadInput) {
  const std::vector<int> a{1, 0}, b{1}, bad{2, 0};
  EXPECT_THROW(confusion(a, b), InputError);
  EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), InputError);
  EXPECT_THROW(confusion(bad, a), InputError);
}

TEST(Metrics, WorkedExample) {
  const ConfusionMatrix cm{40, 10, 5, 45};
  const auto r = evaluate(cm);
  EXPECT_NEAR(r.acc_bw, 0.85, 1e-12);
  EXPECT_NEAR(r.precision, 8.0 / 9.0, 1e-12);
  EXPECT_NEAR(r.recall, 0.8, 1e-12);
  const double f_pos = 2 * (8.0 / 9.0) * 0.8 / (8.0 / 9.0 + 0.8);
  const double f_neg = 2 * (45.0 / 55.0) * 0.9 / (45.0 / 55.0 + 0.9);
  EXPECT_NEAR(r.fw_score, 0.5 * f_pos + 0.5 * f_neg, 1e-12);
  EXPECT_NEAR(r.fw_score, 0.8496, 5e-5);
  EXPECT_NEAR(r.acc_balanced_uniform, 0.85, 1e-12);
  EXPECT_EQ(r.flags, kFlagNone);
}

TEST(Metrics, PrevalenceWeightedAccuracyEqualsPlainAccuracy) {
  Rng rng(56);
  for (int trial = 0; trial < 1000; ++trial) {
    ConfusionMatrix cm{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    if (cm.total() == 0) cm.tp = 1;
    const double acc = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    EXPECT_NEAR(balanced_accuracy_weighted(cm).value, acc, 1e-12);
    EXPECT_NEAR(basic_metrics(cm).accuracy, acc, 1e-12);
  }
}

TEST(Metrics, ClassSwapSymmetry) {
  Rng rng(57);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConfusionMatrix cm{1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50), 1 + rng.below(50)};
    EXPECT_NEAR(weighted_f_score(cm).value, weighted_f_score(cm.swapped()).value, 1e-12);
    EXPECT_NEAR(balanced_accuracy_weighted(cm).value, balanced_accuracy_weighted(cm.swapped()).value, 1e-12);
    EXPECT_NEAR(balanced_accuracy_uniform(cm).value, balanced_accuracy_uniform(cm.swapped()).value, 1e-12);
    const auto r = evaluate(cm);
    for (double v : {r.acc_bw, r.precision, r.recall, r.fw_score}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, DegenerateDenominatorsAreFlagged) {
  const auto none_predicted = evaluate({0, 5, 0, 5});
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_TRUE(none_predicted.flags & kFlagPrecisionUndefined);
  EXPECT_TRUE(none_predicted.flags & kFlagFScoreUndefined);
  EXPECT_NEAR(none_predicted.acc_bw, 0.5, 1e-12);

  const auto no_positives = evaluate({0, 0, 3, 7});
  EXPECT_TRUE(no_positives.flags & kFlagRecallUndefined);
  EXPECT_NEAR(no_positives.acc_bw, 0.7, 1e-12);

  const auto empty = evaluate({});
  EXPECT_TRUE(empty.flags & kFlagEmpty);
  EXPECT_EQ(empty.acc_bw, 0.0);

  const auto perfect = evaluate({5, 0, 0, 5});
  EXPECT_EQ(perfect.flags, kFlagNone);
  EXPECT_EQ(perfect.fw_score, 1.0);
}

TEST(Metrics, FlagText) {
  EXPECT_EQ(describe_flags(kFlagNone), "");
  EXPECT_EQ(describe_flags(kFlagPrecisionUndefined | kFlagNegRecallUndefined),
            "precision_undefined|neg_recall_undefined");
}

}  // namespace
}  // namespace quintlink
