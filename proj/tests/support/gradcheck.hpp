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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "quintlink/layers.hpp"
#include "quintlink/rng.hpp"

namespace quintlink::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Relative error with a floor on the denominator so that gradients that are
// zero up to rounding compare on an absolute scale.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

inline nn::Tensor random_tensor(const nn::Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline void note(GradCheck& r, double analytic, double numeric, const std::string& where) {
  const double e = rel_error(analytic, numeric);
  ++r.checked;
  if (e > r.max_rel_error) {
    r.max_rel_error = e;
    r.worst = where + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
  }
}

/// Central-difference check of a layer under the scalar objective
/// sum(R * forward(x)) with random weights R. Covers the input gradient and
/// every parameter gradient.
inline GradCheck check_layer(nn::Layer& layer, nn::Tensor x, Rng& rng, double h = 1e-5) {
  const nn::Tensor y0 = layer.forward(x, nn::Mode::Train);
  const nn::Tensor weights = random_tensor(y0.shape(), rng);
  auto objective = [&](const nn::Tensor& in) {
    const nn::Tensor y = layer.forward(in, nn::Mode::Train);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += weights[i] * y[i];
    return s;
  };

  for (auto* p : layer.parameters()) p->zero_grad();
  layer.forward(x, nn::Mode::Train);
  const nn::Tensor dx = layer.backward(weights);

  GradCheck r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = objective(x);
    x[i] = orig - h;
    const double down = objective(x);
    x[i] = orig;
    note(r, dx[i], (up - down) / (2 * h), "input[" + std::to_string(i) + "]");
  }
  for (auto* p : layer.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = objective(x);
      p->value[i] = orig - h;
      const double down = objective(x);
      p->value[i] = orig;
      note(r, p->grad[i], (up - down) / (2 * h), p->name + "[" + std::to_string(i) + "]");
    }
  }
  return r;
}

/// Central-difference check of cross-entropy with respect to the logits.
inline GradCheck check_cross_entropy(nn::Tensor logits, std::span<const int> labels, double h = 1e-5) {
  const auto analytic = nn::cross_entropy(logits, labels).grad;
  GradCheck r;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double orig = logits[i];
    logits[i] = orig + h;
    const double up = nn::cross_entropy(logits, labels).loss;
    logits[i] = orig - h;
    const double down = nn::cross_entropy(logits, labels).loss;
    logits[i] = orig;
    note(r, analytic[i], (up - down) / (2 * h), "logit[" + std::to_string(i) + "]");
  }
  return r;
}

/// A random small instance of each layer kind, with a compatible input.
struct LayerCase {
  std::string name;
  nn::LayerSpec spec;
  nn::Shape input;
};

inline LayerCase random_case(const std::string& kind, Rng& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };
  const std::size_t n = pick(2, 5);
  if (kind == "Linear") {
    const auto in = pick(1, 6), out = pick(1, 5);
    return {kind, nn::LinearSpec{in, out}, {n, in}};
  }
  if (kind == "BatchNorm1d") {
    const auto c = pick(1, 4);
    if (rng.bernoulli(0.5)) return {kind, nn::BatchNormSpec{c}, {n, c}};
    return {kind, nn::BatchNormSpec{c}, {n, c, pick(1, 4)}};
  }
  if (kind == "Conv1D") {
    const auto cin = pick(1, 3), f = pick(1, 3), k = pick(1, 4), s = pick(1, 3);
    return {kind, nn::Conv1dSpec{cin, f, k, s}, {n, cin, k + pick(0, 6)}};
  }
  if (kind == "AvgPool1D") {
    const auto k = pick(1, 4), s = pick(1, 3);
    return {kind, nn::AvgPool1dSpec{k, s}, {n, pick(1, 3), k + pick(0, 6)}};
  }
  if (kind == "BiLSTM") {
    const auto in = pick(1, 3), hid = pick(1, 3), layers = pick(1, 2);
    return {kind, nn::BiLstmSpec{in, hid, layers}, {n, pick(1, 4), in}};
  }
  if (kind == "Sigmoid") return {kind, nn::SigmoidSpec{}, {n, pick(1, 5)}};
  if (kind == "Softmax") return {kind, nn::SoftmaxSpec{}, {n, pick(1, 5)}};
  if (kind == "ReLU") return {kind, nn::ReluSpec{}, {n, pick(1, 5)}};
  if (kind == "ToSequence") return {kind, nn::ToSequenceSpec{pick(1, 4)}, {n, pick(1, 9)}};
  if (kind == "LastStep") return {kind, nn::LastStepSpec{}, {n, pick(1, 4), pick(1, 3)}};
  if (kind == "Flatten") return {kind, nn::FlattenSpec{}, {n, pick(1, 3), pick(1, 3)}};
  if (kind == "ToChannels") return {kind, nn::ToChannelsSpec{}, {n, pick(1, 5)}};
  throw std::invalid_argument("no random case for " + kind);
}

}  // namespace quintlink::testing
