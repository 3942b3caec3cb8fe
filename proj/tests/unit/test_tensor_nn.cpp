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

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "quintlink/error.hpp"
#include "quintlink/layers.hpp"
#include "quintlink/optim.hpp"

namespace quintlink::nn {
namespace {

using quintlink::testing::check_layer;
using quintlink::testing::random_case;
using quintlink::testing::random_tensor;

class GradientTest : public ::testing::TestWithParam<std::string> {};

TEST_P(GradientTest, MatchesCentralDifferences) {
  Rng rng(derive_seed(11, GetParam()));
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_case(GetParam(), rng);
    auto layer = make_layer(c.spec, rng);
    Tensor x = random_tensor(c.input, rng);
    if (GetParam() == "ReLU") {
      for (auto& v : x.values())
        if (std::abs(v) < 1e-2) v = 0.5;
    }
    const auto r = check_layer(*layer, x, rng);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LE(r.max_rel_error, 1e-4) << describe(c.spec) << " on " << to_string(c.input) << ": " << r.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllLayers, GradientTest,
                         ::testing::Values("Linear", "BatchNorm1d", "Conv1D", "AvgPool1D", "BiLSTM", "Sigmoid",
                                           "Softmax", "ReLU", "ToSequence", "LastStep", "Flatten", "ToChannels"));

TEST(CrossEntropy, GradientMatchesCentralDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 1 + rng.below(6);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    const auto r = quintlink::testing::check_cross_entropy(random_tensor({n, 2}, rng, -3, 3), labels);
    EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  }
}

TEST(CrossEntropy, UniformLogitsGiveLn2) {
  const std::vector<int> labels{0};
  EXPECT_NEAR(cross_entropy(Tensor({1, 2}, 0.0), labels).loss, std::log(2.0), 1e-12);
}

TEST(CrossEntropy, ConfidentCorrectLogitsGiveTinyLoss) {
  const std::vector<int> labels{0, 1};
  Tensor logits({2, 2}, std::vector<double>{20, -20, -20, 20});
  EXPECT_LE(cross_entropy(logits, labels).loss, 1e-8);
}

TEST(CrossEntropy, RejectsNonFiniteLogits) {
  const std::vector<int> labels{0};
  Tensor logits({1, 2}, std::vector<double>{NAN, 0});
  EXPECT_THROW(cross_entropy(logits, labels), NumericError);
}

TEST(Shapes, ConvOutputLengthOnEmbeddingWidth) {
  Rng rng(1);
  auto conv = make_layer(Conv1dSpec{1, 32, 7, 2}, rng);
  const auto y = conv->forward(Tensor({2, 1, 384}), Mode::Eval);
  EXPECT_EQ(y.shape(), (Shape{2, 32, 189}));
}

TEST(Shapes, WindowFormulaHoldsForAllValidSizes) {
  Rng rng(2);
  for (std::size_t len = 1; len <= 20; ++len)
    for (std::size_t k = 1; k <= len; ++k)
      for (std::size_t s = 1; s <= 4; ++s) {
        auto pool = make_layer(AvgPool1dSpec{k, s}, rng);
        const auto y = pool->forward(Tensor({1, 1, len}), Mode::Eval);
        // Count window start positions directly.
        std::size_t starts = 0;
        for (std::size_t p = 0; p + k <= len; p += s) ++starts;
        EXPECT_EQ(y.dim(2), starts);
      }
}

TEST(Shapes, WindowLongerThanInputIsConfigError) {
  Rng rng(3);
  auto pool = make_layer(AvgPool1dSpec{7, 1}, rng);
  EXPECT_THROW(pool->forward(Tensor({1, 1, 6}), Mode::Eval), ConfigError);
}

TEST(Shapes, MismatchNamesLayerAndDims) {
  Rng rng(4);
  auto lin = make_layer(LinearSpec{4, 2}, rng);
  try {
    lin->forward(Tensor({3, 5}), Mode::Eval);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("Linear(4,2)"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(3, 5)"), std::string::npos);
  }
}

TEST(Softmax, ZeroRowIsUniform) {
  Rng rng(1);
  auto sm = make_layer(SoftmaxSpec{}, rng);
  const auto y = sm->forward(Tensor({1, 2}), Mode::Eval);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
  EXPECT_DOUBLE_EQ(y[1], 0.5);
}

TEST(Softmax, RowsSumToOneInOpenInterval) {
  Rng rng(9);
  auto sm = make_layer(SoftmaxSpec{}, rng);
  const auto y = sm->forward(random_tensor({50, 4}, rng, -8, 8), Mode::Eval);
  for (std::size_t i = 0; i < 50; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_GT(y.at(i, j), 0.0);
      EXPECT_LT(y.at(i, j), 1.0);
      s += y.at(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(BatchNorm, TrainOutputHasZeroBatchMean) {
  Rng rng(6);
  auto bn = make_layer(BatchNormSpec{3}, rng);
  const auto y = bn->forward(random_tensor({8, 3}, rng, -5, 5), Mode::Train);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0;
    for (std::size_t i = 0; i < 8; ++i) m += y.at(i, c);
    EXPECT_LE(std::abs(m / 8), 1e-9);
  }
}

TEST(BatchNorm, RunningStatsConvergeToBatchStats) {
  Rng rng(7);
  auto bn = make_layer(BatchNormSpec{2}, rng);
  const auto x = random_tensor({10, 2}, rng, -2, 4);
  for (int i = 0; i < 200; ++i) bn->forward(x, Mode::Train);
  const auto buffers = bn->buffers();
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0, ss = 0;
    for (std::size_t i = 0; i < 10; ++i) mean += x.at(i, c);
    mean /= 10;
    for (std::size_t i = 0; i < 10; ++i) ss += (x.at(i, c) - mean) * (x.at(i, c) - mean);
    EXPECT_NEAR((*buffers[0])[c], mean, 1e-6);
    EXPECT_NEAR((*buffers[1])[c], ss / 9, 1e-6);
  }
}

TEST(Layers, EvalForwardIsDeterministicAndSideEffectFree) {
  Rng rng(8);
  auto bn = make_layer(BatchNormSpec{3}, rng);
  bn->forward(random_tensor({4, 3}, rng), Mode::Train);
  const auto before = *bn->buffers()[0];
  const auto x = random_tensor({4, 3}, rng);
  const auto a = bn->forward(x, Mode::Eval);
  const auto b = bn->forward(x, Mode::Eval);
  EXPECT_EQ(a, b);
  EXPECT_EQ(*bn->buffers()[0], before);
}

TEST(Layers, BackwardWithoutTrainForwardIsStateError) {
  Rng rng(1);
  auto lin = make_layer(LinearSpec{2, 2}, rng);
  EXPECT_THROW(lin->backward(Tensor({1, 2})), StateError);
  lin->forward(Tensor({1, 2}), Mode::Eval);
  EXPECT_THROW(lin->backward(Tensor({1, 2})), StateError);
}

TEST(Layers, ZeroUpstreamGivesZeroParameterGradients) {
  Rng rng(1);
  auto lin = make_layer(LinearSpec{3, 2}, rng);
  lin->forward(random_tensor({4, 3}, rng), Mode::Train);
  lin->backward(Tensor({4, 2}));
  for (auto* p : lin->parameters())
    for (double g : p->grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Layers, ReluGradientIsZeroForNegativeInputs) {
  Rng rng(1);
  auto relu = make_layer(ReluSpec{}, rng);
  relu->forward(Tensor({1, 3}, std::vector<double>{-1, -0.5, 2}), Mode::Train);
  const auto g = relu->backward(Tensor({1, 3}, 1.0));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 1.0);
}

TEST(Layers, InitBoundsAndForgetBias) {
  Rng rng(10);
  auto lin = make_layer(LinearSpec{16, 4}, rng);
  for (auto* p : lin->parameters())
    for (double v : p->value.values()) EXPECT_LE(std::abs(v), 0.25);
  auto lstm = make_layer(BiLstmSpec{3, 4, 1}, rng);
  const auto params = lstm->parameters();
  const auto& bias = params[2]->value;
  for (std::size_t j = 4; j < 8; ++j) EXPECT_GE(bias[j], 0.5);
}

TEST(Layers, SpecTextRoundTrips) {
  const std::vector<LayerSpec> specs{LinearSpec{3, 4}, ReluSpec{}, SigmoidSpec{}, SoftmaxSpec{}, BatchNormSpec{5},
                                     Conv1dSpec{1, 32, 7, 2}, AvgPool1dSpec{7, 1}, BiLstmSpec{16, 16, 2},
                                     FlattenSpec{}, ToChannelsSpec{}, ToSequenceSpec{16}, LastStepSpec{}};
  for (const auto& s : specs) EXPECT_EQ(describe(parse_layer_spec(describe(s))), describe(s));
  EXPECT_THROW(parse_layer_spec("Linear(3)"), FormatError);
  EXPECT_THROW(parse_layer_spec("Dense(3,4)"), FormatError);
}

TEST(Sequential, NonFiniteOutputIsNumericError) {
  Rng rng(1);
  Sequential s;
  s.add(make_layer(LinearSpec{1, 1}, rng));
  Tensor x({1, 1}, std::vector<double>{INFINITY});
  EXPECT_THROW(s.forward(x, Mode::Eval), NumericError);
}

TEST(Adam, ConvergesOnQuadratic) {
  Parameter x("x", Tensor({1}, 0.0));
  AdamState state;
  std::vector<Parameter*> params{&x};
  for (int i = 0; i < 500; ++i) {
    x.grad[0] = 2 * (x.value[0] - 3);
    adam_step(params, state, 0.1);
  }
  EXPECT_LE(std::abs(x.value[0] - 3), 1e-3);
  EXPECT_EQ(state.t, 500u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter x("x", Tensor({3}, 1.5));
  AdamState state;
  std::vector<Parameter*> params{&x};
  adam_step(params, state, 0.1);
  for (double v : x.value.values()) EXPECT_EQ(v, 1.5);
}

TEST(Adam, FirstStepsMatchClosedForm) {
  Parameter x("x", Tensor({1}, 1.0));
  AdamState state;
  std::vector<Parameter*> params{&x};
  double m = 0, v = 0, value = 1.0;
  const double grads[] = {0.5, -0.2, 0.9};
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    x.grad[0] = g;
    adam_step(params, state, 0.01);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    value -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(x.value[0], value, 1e-15);
    EXPECT_EQ(x.grad[0], 0.0);
  }
}

}  // namespace
}  // namespace quintlink::nn
