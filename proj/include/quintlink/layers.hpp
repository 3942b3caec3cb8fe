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

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "quintlink/rng.hpp"
#include "quintlink/tensor.hpp"

namespace quintlink::nn {

enum class Mode { Train, Eval };

// Layer descriptions. Batch is always the leading axis; channel-first
// (N, C, L) layout for convolution, pooling and 3-D batch norm; (N, T, F)
// for sequences.

/// y = xW + b, x: (N, in).
struct LinearSpec {
  std::size_t in = 0;
  std::size_t out = 0;
};
struct ReluSpec {};
struct SigmoidSpec {};
/// Row-wise softmax over (N, C).
struct SoftmaxSpec {};
/// Normalizes (N, C) or (N, C, L) per channel; eps 1e-5, momentum 0.1.
struct BatchNormSpec {
  std::size_t features = 0;
};
/// Valid (unpadded) convolution, output length floor((L - kernel) / stride) + 1.
struct Conv1dSpec {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
};
struct AvgPool1dSpec {
  std::size_t kernel = 0;
  std::size_t stride = 1;
};
/// Stacked bidirectional LSTM, (N, T, input) -> (N, T, 2 * hidden).
struct BiLstmSpec {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t layers = 1;
};
/// (N, ...) -> (N, product of the rest).
struct FlattenSpec {};
/// (N, D) -> (N, 1, D).
struct ToChannelsSpec {};
/// (N, D) -> (N, ceil(D / step), step), zero-padded at the tail.
struct ToSequenceSpec {
  std::size_t step = 0;
};
/// (N, T, F) -> (N, F), the final time step.
struct LastStepSpec {};

using LayerSpec = std::variant<LinearSpec, ReluSpec, SigmoidSpec, SoftmaxSpec, BatchNormSpec, Conv1dSpec,
                               AvgPool1dSpec, BiLstmSpec, FlattenSpec, ToChannelsSpec, ToSequenceSpec, LastStepSpec>;

/// Compact text form, e.g. "Conv1D(1,32,7,2)". Round-trips through parse_layer_spec.
std::string describe(const LayerSpec& spec);
LayerSpec parse_layer_spec(const std::string& text);

/// Output length of a valid sliding window; throws ConfigError if it is not positive.
std::size_t window_output_length(std::size_t length, std::size_t kernel, std::size_t stride);

/// A differentiable layer. forward() in Train mode saves what backward()
/// needs; backward() accumulates (+=) into parameter gradients and returns
/// the gradient with respect to the input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& input, Mode mode) = 0;
  /// Throws StateError unless the last forward() ran in Train mode.
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  /// Non-trainable state that is part of a checkpoint (batch-norm running stats).
  virtual std::vector<Tensor*> buffers() { return {}; }
  virtual LayerSpec spec() const = 0;
};

/// Creates a layer with freshly initialized parameters: Linear/Conv1D
/// uniform in +-sqrt(1/fan_in), LSTM uniform in +-sqrt(1/hidden) with the
/// forget-gate bias raised by 1, batch norm scale 1 and shift 0.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& init_rng);

/// Ordered layer stack. Every layer output is checked for NaN/Inf.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& input, Mode mode);
  Tensor backward(const Tensor& grad_output);

  std::vector<Parameter*> parameters();
  std::vector<Tensor*> buffers();
  std::vector<LayerSpec> specs() const;
  std::size_t parameter_count() const;
  std::size_t size() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
  double loss = 0.0;
  /// d loss / d logits, same shape as the logits.
  Tensor grad;
};

/// Mean over rows of -log softmax(logits)[label]; gradient (softmax - onehot) / N.
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace quintlink::nn
