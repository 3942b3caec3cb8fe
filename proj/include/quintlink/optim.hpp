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
#include <vector>

#include "quintlink/tensor.hpp"

namespace quintlink::nn {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update over every trainable parameter, then zeroes
/// all gradients. Moment buffers are created on the first call.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr) : params_(std::move(params)), lr_(lr) {}

  void step() { adam_step(params_, state_, lr_); }
  const AdamState& state() const noexcept { return state_; }
  double learning_rate() const noexcept { return lr_; }

 private:
  std::vector<Parameter*> params_;
  AdamState state_;
  double lr_;
};

}  // namespace quintlink::nn
