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

#include "quintlink/optim.hpp"

#include <cmath>

#include "quintlink/error.hpp"

namespace quintlink::nn {

void adam_step(std::span<Parameter* const> params, AdamState& s, double lr) {
  if (s.m.empty() && !params.empty()) {
    for (const auto* p : params) {
      s.m.emplace_back(p->value.shape());
      s.v.emplace_back(p->value.shape());
    }
  }
  if (s.m.size() != params.size()) throw StateError("Adam state does not match the parameter list");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.trainable) {
      auto& m = s.m[k];
      auto& v = s.v[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
        p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
      }
    }
    p.zero_grad();
  }
}

}  // namespace quintlink::nn
