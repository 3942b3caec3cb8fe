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

#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace quintlink {

/// Binary confusion counts with 1 = positive.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fn + fp + tn; }
  /// Prevalence of the positive class, (tp + fn) / N.
  double weight_positive() const noexcept;
  double weight_negative() const noexcept;
  /// The same predictions seen with the class roles exchanged.
  ConfusionMatrix swapped() const noexcept { return {tn, fp, fn, tp}; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Degenerate-denominator markers; a flagged metric is reported as 0.
enum MetricFlag : std::uint32_t {
  kFlagNone = 0,
  kFlagEmpty = 1u << 0,
  kFlagPrecisionUndefined = 1u << 1,
  kFlagRecallUndefined = 1u << 2,
  kFlagFScoreUndefined = 1u << 3,
  kFlagNegPrecisionUndefined = 1u << 4,
  kFlagNegRecallUndefined = 1u << 5,
  kFlagNegFScoreUndefined = 1u << 6,
};

/// Compact text form, e.g. "precision_undefined|neg_recall_undefined"; "" when no flag is set.
std::string describe_flags(std::uint32_t flags);

/// Throws InputError on a length mismatch, an empty input, or a label outside {0, 1}.
ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);

struct BasicMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::uint32_t flags = kFlagNone;
};

BasicMetrics basic_metrics(const ConfusionMatrix& cm);

struct ScalarMetric {
  double value = 0.0;
  std::uint32_t flags = kFlagNone;
};

/// Prevalence-weighted sum of the positive- and negative-class f-scores. The
/// negative class uses tn as its true positives.
ScalarMetric weighted_f_score(const ConfusionMatrix& cm);

/// w_p * tp / (tp + fn) + w_n * tn / (tn + fp) with prevalence weights.
ScalarMetric balanced_accuracy_weighted(const ConfusionMatrix& cm);

/// Mean of the two class recalls (uniform weights). Not part of the reported
/// metric set unless explicitly requested.
ScalarMetric balanced_accuracy_uniform(const ConfusionMatrix& cm);

struct MetricReport {
  ConfusionMatrix cm;
  double acc_bw = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fw_score = 0.0;
  double acc_balanced_uniform = 0.0;
  std::uint32_t flags = kFlagNone;
};

MetricReport evaluate(const ConfusionMatrix& cm);

}  // namespace quintlink
