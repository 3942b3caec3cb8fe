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

#include "quintlink/metrics.hpp"

#include "quintlink/error.hpp"

namespace quintlink {

namespace {

double ratio(std::uint64_t num, std::uint64_t den, std::uint32_t flag, std::uint32_t& flags) {
  if (den == 0) {
    flags |= flag;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, std::uint32_t flag, std::uint32_t& flags) {
  if (p + r == 0.0) {
    flags |= flag;
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

}  // namespace

double ConfusionMatrix::weight_positive() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(tp + fn) / static_cast<double>(n);
}

double ConfusionMatrix::weight_negative() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(fp + tn) / static_cast<double>(n);
}

std::string describe_flags(std::uint32_t flags) {
  static constexpr std::pair<std::uint32_t, const char*> kNames[] = {
      {kFlagEmpty, "empty"},
      {kFlagPrecisionUndefined, "precision_undefined"},
      {kFlagRecallUndefined, "recall_undefined"},
      {kFlagFScoreUndefined, "fscore_undefined"},
      {kFlagNegPrecisionUndefined, "neg_precision_undefined"},
      {kFlagNegRecallUndefined, "neg_recall_undefined"},
      {kFlagNegFScoreUndefined, "neg_fscore_undefined"},
  };
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (flags & bit) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw InputError("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw InputError("confusion: no labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predicted[i], t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw InputError("confusion: labels must be 0 or 1");
    if (t == 1) {
      ++(p == 1 ? cm.tp : cm.fn);
    } else {
      ++(p == 1 ? cm.fp : cm.tn);
    }
  }
  return cm;
}

BasicMetrics basic_metrics(const ConfusionMatrix& cm) {
  BasicMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total(), kFlagEmpty, m.flags);
  m.precision = ratio(cm.tp, cm.tp + cm.fp, kFlagPrecisionUndefined, m.flags);
  m.recall = ratio(cm.tp, cm.tp + cm.fn, kFlagRecallUndefined, m.flags);
  m.f_score = harmonic(m.precision, m.recall, kFlagFScoreUndefined, m.flags);
  return m;
}

ScalarMetric weighted_f_score(const ConfusionMatrix& cm) {
  ScalarMetric out;
  if (cm.total() == 0) return {0.0, kFlagEmpty};
  const double p_pos = ratio(cm.tp, cm.tp + cm.fp, kFlagPrecisionUndefined, out.flags);
  const double r_pos = ratio(cm.tp, cm.tp + cm.fn, kFlagRecallUndefined, out.flags);
  const double f_pos = harmonic(p_pos, r_pos, kFlagFScoreUndefined, out.flags);
  const double p_neg = ratio(cm.tn, cm.tn + cm.fn, kFlagNegPrecisionUndefined, out.flags);
  const double r_neg = ratio(cm.tn, cm.tn + cm.fp, kFlagNegRecallUndefined, out.flags);
  const double f_neg = harmonic(p_neg, r_neg, kFlagNegFScoreUndefined, out.flags);
  out.value = cm.weight_positive() * f_pos + cm.weight_negative() * f_neg;
  return out;
}

ScalarMetric balanced_accuracy_weighted(const ConfusionMatrix& cm) {
  ScalarMetric out;
  if (cm.total() == 0) return {0.0, kFlagEmpty};
  const double r_pos = ratio(cm.tp, cm.tp + cm.fn, kFlagRecallUndefined, out.flags);
  const double r_neg = ratio(cm.tn, cm.tn + cm.fp, kFlagNegRecallUndefined, out.flags);
  out.value = cm.weight_positive() * r_pos + cm.weight_negative() * r_neg;
  return out;
}

ScalarMetric balanced_accuracy_uniform(const ConfusionMatrix& cm) {
  ScalarMetric out;
  if (cm.total() == 0) return {0.0, kFlagEmpty};
  const double r_pos = ratio(cm.tp, cm.tp + cm.fn, kFlagRecallUndefined, out.flags);
  const double r_neg = ratio(cm.tn, cm.tn + cm.fp, kFlagNegRecallUndefined, out.flags);
  out.value = 0.5 * (r_pos + r_neg);
  return out;
}

MetricReport evaluate(const ConfusionMatrix& cm) {
  MetricReport r;
  r.cm = cm;
  const auto basic = basic_metrics(cm);
  const auto acc = balanced_accuracy_weighted(cm);
  const auto fw = weighted_f_score(cm);
  r.acc_bw = acc.value;
  r.precision = basic.precision;
  r.recall = basic.recall;
  r.fw_score = fw.value;
  r.acc_balanced_uniform = balanced_accuracy_uniform(cm).value;
  r.flags = basic.flags | acc.flags | fw.flags;
  return r;
}

}  // namespace quintlink
