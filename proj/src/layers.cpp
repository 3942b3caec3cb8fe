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

#include "quintlink/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "quintlink/error.hpp"

namespace quintlink::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void fill_uniform(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

[[noreturn]] void shape_error(const std::string& layer, const std::string& expected, const Tensor& got) {
  throw ShapeError(layer + ": expected input " + expected + ", got " + to_string(got.shape()));
}

void require_context(bool saved, const std::string& layer) {
  if (!saved) throw StateError(layer + ": backward called without a train-mode forward");
}

// ---------------------------------------------------------------------------

class Linear final : public Layer {
 public:
  Linear(LinearSpec s, Rng& rng)
      : spec_(s), weight_("weight", Tensor({s.in, s.out})), bias_("bias", Tensor({s.out})) {
    if (s.in == 0 || s.out == 0) throw ConfigError("Linear needs positive sizes");
    const double bound = std::sqrt(1.0 / static_cast<double>(s.in));
    fill_uniform(weight_.value, bound, rng);
    fill_uniform(bias_.value, bound, rng);
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 2 || x.dim(1) != spec_.in) shape_error(name(), "(N, " + std::to_string(spec_.in) + ")", x);
    const auto n = x.dim(0);
    Tensor y({n, spec_.out});
    auto Y = as_matrix(y, n, spec_.out);
    Y.noalias() = as_matrix(x, n, spec_.in) * as_matrix(weight_.value, spec_.in, spec_.out);
    Y.rowwise() += ConstVecMap(bias_.value.data(), static_cast<Eigen::Index>(spec_.out));
    saved_ = mode == Mode::Train;
    if (saved_) input_ = x;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_context(saved_, name());
    const auto n = input_.dim(0);
    if (g.shape() != Shape{n, spec_.out}) shape_error(name() + " backward", "(N, out)", g);
    auto G = as_matrix(g, n, spec_.out);
    auto X = as_matrix(input_, n, spec_.in);
    as_matrix(weight_.grad, spec_.in, spec_.out).noalias() += X.transpose() * G;
    VecMap(bias_.grad.data(), static_cast<Eigen::Index>(spec_.out)) += G.colwise().sum();
    Tensor dx({n, spec_.in});
    as_matrix(dx, n, spec_.in).noalias() = G * as_matrix(weight_.value, spec_.in, spec_.out).transpose();
    return dx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  LayerSpec spec() const override { return spec_; }

 private:
  std::string name() const { return describe(spec_); }
  LinearSpec spec_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
  bool saved_ = false;
};

class Relu final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    Tensor y = x;
    for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
    saved_ = mode == Mode::Train;
    if (saved_) input_ = x;
    return y;
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "ReLU");
    if (g.shape() != input_.shape()) shape_error("ReLU backward", to_string(input_.shape()), g);
    Tensor dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(input_[i] > 0.0)) dx[i] = 0.0;
    return dx;
  }
  LayerSpec spec() const override { return ReluSpec{}; }

 private:
  Tensor input_;
  bool saved_ = false;
};

class Sigmoid final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    Tensor y = x;
    for (auto& v : y.values()) v = sigmoid(v);
    saved_ = mode == Mode::Train;
    if (saved_) output_ = y;
    return y;
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "Sigmoid");
    if (g.shape() != output_.shape()) shape_error("Sigmoid backward", to_string(output_.shape()), g);
    Tensor dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= output_[i] * (1.0 - output_[i]);
    return dx;
  }
  LayerSpec spec() const override { return SigmoidSpec{}; }

 private:
  Tensor output_;
  bool saved_ = false;
};

Tensor softmax_rows(const Tensor& x) {
  const auto n = x.dim(0), c = x.dim(1);
  Tensor y({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    double mx = x.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += (y.at(i, j) = std::exp(x.at(i, j) - mx));
    for (std::size_t j = 0; j < c; ++j) y.at(i, j) /= sum;
  }
  return y;
}

class Softmax final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 2 || x.dim(1) == 0) shape_error("Softmax", "(N, C)", x);
    Tensor y = softmax_rows(x);
    saved_ = mode == Mode::Train;
    if (saved_) output_ = y;
    return y;
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "Softmax");
    if (g.shape() != output_.shape()) shape_error("Softmax backward", to_string(output_.shape()), g);
    const auto n = g.dim(0), c = g.dim(1);
    Tensor dx({n, c});
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g.at(i, j) * output_.at(i, j);
      for (std::size_t j = 0; j < c; ++j) dx.at(i, j) = output_.at(i, j) * (g.at(i, j) - dot);
    }
    return dx;
  }
  LayerSpec spec() const override { return SoftmaxSpec{}; }

 private:
  Tensor output_;
  bool saved_ = false;
};

class BatchNorm final : public Layer {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  explicit BatchNorm(BatchNormSpec s)
      : spec_(s),
        gamma_("gamma", Tensor({s.features}, 1.0)),
        beta_("beta", Tensor({s.features}, 0.0)),
        running_mean_({s.features}, 0.0),
        running_var_({s.features}, 1.0) {
    if (s.features == 0) throw ConfigError("BatchNorm1d needs a positive feature count");
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    const auto c = spec_.features;
    if (!((x.rank() == 2 || x.rank() == 3) && x.dim(1) == c && x.dim(0) > 0)) {
      shape_error(describe(spec_), "(N, " + std::to_string(c) + ") or (N, " + std::to_string(c) + ", L)", x);
    }
    const auto n = x.dim(0);
    const auto len = x.rank() == 3 ? x.dim(2) : 1;
    const auto m = n * len;
    auto idx = [&](std::size_t i, std::size_t ch, std::size_t t) { return (i * c + ch) * len + t; };

    Tensor y(x.shape());
    if (mode == Mode::Eval) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(running_var_[ch] + kEps);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t t = 0; t < len; ++t) {
            const auto k = idx(i, ch, t);
            y[k] = gamma_.value[ch] * (x[k] - running_mean_[ch]) * inv + beta_.value[ch];
          }
      }
      saved_ = false;
      return y;
    }

    xhat_ = Tensor(x.shape());
    inv_std_.assign(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) mean += x[idx(i, ch, t)];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) {
          const double d = x[idx(i, ch, t)] - mean;
          var += d * d;
        }
      var /= static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + kEps);
      inv_std_[ch] = inv;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) {
          const auto k = idx(i, ch, t);
          xhat_[k] = (x[k] - mean) * inv;
          y[k] = gamma_.value[ch] * xhat_[k] + beta_.value[ch];
        }
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      running_mean_[ch] = (1.0 - kMomentum) * running_mean_[ch] + kMomentum * mean;
      running_var_[ch] = (1.0 - kMomentum) * running_var_[ch] + kMomentum * unbiased;
    }
    saved_ = true;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_context(saved_, describe(spec_));
    if (g.shape() != xhat_.shape()) shape_error(describe(spec_) + " backward", to_string(xhat_.shape()), g);
    const auto c = spec_.features;
    const auto n = g.dim(0);
    const auto len = g.rank() == 3 ? g.dim(2) : 1;
    const double m = static_cast<double>(n * len);
    auto idx = [&](std::size_t i, std::size_t ch, std::size_t t) { return (i * c + ch) * len + t; };
    Tensor dx(g.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) {
          const auto k = idx(i, ch, t);
          sum_g += g[k];
          sum_gx += g[k] * xhat_[k];
        }
      gamma_.grad[ch] += sum_gx;
      beta_.grad[ch] += sum_g;
      const double scale = gamma_.value[ch] * inv_std_[ch] / m;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) {
          const auto k = idx(i, ch, t);
          dx[k] = scale * (m * g[k] - sum_g - xhat_[k] * sum_gx);
        }
    }
    return dx;
  }

  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Tensor*> buffers() override { return {&running_mean_, &running_var_}; }
  LayerSpec spec() const override { return spec_; }

 private:
  BatchNormSpec spec_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
  Tensor xhat_;
  std::vector<double> inv_std_;
  bool saved_ = false;
};

class Conv1d final : public Layer {
 public:
  Conv1d(Conv1dSpec s, Rng& rng)
      : spec_(s),
        weight_("weight", Tensor({s.filters, s.in_channels * s.kernel})),
        bias_("bias", Tensor({s.filters})) {
    if (s.in_channels == 0 || s.filters == 0 || s.kernel == 0 || s.stride == 0) {
      throw ConfigError("Conv1D needs positive channels, filters, kernel and stride");
    }
    const double bound = std::sqrt(1.0 / static_cast<double>(s.in_channels * s.kernel));
    fill_uniform(weight_.value, bound, rng);
    fill_uniform(bias_.value, bound, rng);
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 3 || x.dim(1) != spec_.in_channels) {
      shape_error(describe(spec_), "(N, " + std::to_string(spec_.in_channels) + ", L)", x);
    }
    const auto n = x.dim(0), len = x.dim(2);
    const auto out_len = window_output_length(len, spec_.kernel, spec_.stride);
    const auto rows = spec_.in_channels * spec_.kernel;
    const auto cols_n = n * out_len;

    RowMat cols(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols_n));
    for (std::size_t c = 0; c < spec_.in_channels; ++c)
      for (std::size_t k = 0; k < spec_.kernel; ++k) {
        double* dst = cols.row(static_cast<Eigen::Index>(c * spec_.kernel + k)).data();
        for (std::size_t i = 0; i < n; ++i) {
          const double* src = x.data() + (i * spec_.in_channels + c) * len + k;
          for (std::size_t t = 0; t < out_len; ++t) dst[i * out_len + t] = src[t * spec_.stride];
        }
      }
    RowMat out = as_matrix(weight_.value, spec_.filters, rows) * cols;
    out.colwise() += Eigen::Map<const Eigen::VectorXd>(bias_.value.data(), static_cast<Eigen::Index>(spec_.filters));

    Tensor y({n, spec_.filters, out_len});
    for (std::size_t f = 0; f < spec_.filters; ++f) {
      const double* src = out.row(static_cast<Eigen::Index>(f)).data();
      for (std::size_t i = 0; i < n; ++i)
        std::copy(src + i * out_len, src + (i + 1) * out_len, y.data() + (i * spec_.filters + f) * out_len);
    }
    saved_ = mode == Mode::Train;
    if (saved_) {
      cols_ = std::move(cols);
      input_shape_ = x.shape();
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_context(saved_, describe(spec_));
    const auto n = input_shape_[0], len = input_shape_[2];
    const auto out_len = window_output_length(len, spec_.kernel, spec_.stride);
    if (g.shape() != Shape{n, spec_.filters, out_len}) shape_error(describe(spec_) + " backward", "(N, F, Lout)", g);
    const auto rows = spec_.in_channels * spec_.kernel;

    RowMat G(static_cast<Eigen::Index>(spec_.filters), static_cast<Eigen::Index>(n * out_len));
    for (std::size_t f = 0; f < spec_.filters; ++f) {
      double* dst = G.row(static_cast<Eigen::Index>(f)).data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = g.data() + (i * spec_.filters + f) * out_len;
        std::copy(src, src + out_len, dst + i * out_len);
      }
    }
    as_matrix(weight_.grad, spec_.filters, rows).noalias() += G * cols_.transpose();
    Eigen::Map<Eigen::VectorXd>(bias_.grad.data(), static_cast<Eigen::Index>(spec_.filters)) += G.rowwise().sum();
    RowMat dcols = as_matrix(weight_.value, spec_.filters, rows).transpose() * G;

    Tensor dx(input_shape_);
    for (std::size_t c = 0; c < spec_.in_channels; ++c)
      for (std::size_t k = 0; k < spec_.kernel; ++k) {
        const double* src = dcols.row(static_cast<Eigen::Index>(c * spec_.kernel + k)).data();
        for (std::size_t i = 0; i < n; ++i) {
          double* dst = dx.data() + (i * spec_.in_channels + c) * len + k;
          for (std::size_t t = 0; t < out_len; ++t) dst[t * spec_.stride] += src[i * out_len + t];
        }
      }
    return dx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  LayerSpec spec() const override { return spec_; }

 private:
  Conv1dSpec spec_;
  Parameter weight_;
  Parameter bias_;
  RowMat cols_;
  Shape input_shape_;
  bool saved_ = false;
};

class AvgPool1d final : public Layer {
 public:
  explicit AvgPool1d(AvgPool1dSpec s) : spec_(s) {
    if (s.kernel == 0 || s.stride == 0) throw ConfigError("AvgPool1D needs positive kernel and stride");
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 3) shape_error(describe(spec_), "(N, C, L)", x);
    const auto n = x.dim(0), c = x.dim(1), len = x.dim(2);
    const auto out_len = window_output_length(len, spec_.kernel, spec_.stride);
    const double inv = 1.0 / static_cast<double>(spec_.kernel);
    Tensor y({n, c, out_len});
    for (std::size_t r = 0; r < n * c; ++r) {
      const double* src = x.data() + r * len;
      double* dst = y.data() + r * out_len;
      for (std::size_t t = 0; t < out_len; ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < spec_.kernel; ++k) s += src[t * spec_.stride + k];
        dst[t] = s * inv;
      }
    }
    saved_ = mode == Mode::Train;
    if (saved_) input_shape_ = x.shape();
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_context(saved_, describe(spec_));
    const auto n = input_shape_[0], c = input_shape_[1], len = input_shape_[2];
    const auto out_len = window_output_length(len, spec_.kernel, spec_.stride);
    if (g.shape() != Shape{n, c, out_len}) shape_error(describe(spec_) + " backward", "(N, C, Lout)", g);
    const double inv = 1.0 / static_cast<double>(spec_.kernel);
    Tensor dx(input_shape_);
    for (std::size_t r = 0; r < n * c; ++r) {
      const double* src = g.data() + r * out_len;
      double* dst = dx.data() + r * len;
      for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t k = 0; k < spec_.kernel; ++k) dst[t * spec_.stride + k] += src[t] * inv;
    }
    return dx;
  }

  LayerSpec spec() const override { return spec_; }

 private:
  AvgPool1dSpec spec_;
  Shape input_shape_;
  bool saved_ = false;
};

class BiLstm final : public Layer {
 public:
  BiLstm(BiLstmSpec s, Rng& rng) : spec_(s) {
    if (s.input == 0 || s.hidden == 0 || s.layers == 0) throw ConfigError("BiLSTM needs positive sizes");
    const auto h = s.hidden;
    const double bound = std::sqrt(1.0 / static_cast<double>(h));
    for (std::size_t l = 0; l < s.layers; ++l) {
      const auto in = l == 0 ? s.input : 2 * h;
      for (std::size_t d = 0; d < 2; ++d) {
        const std::string prefix = "l" + std::to_string(l) + (d == 0 ? ".fwd." : ".bwd.");
        Cell cell{Parameter(prefix + "w_ih", Tensor({in, 4 * h})), Parameter(prefix + "w_hh", Tensor({h, 4 * h})),
                  Parameter(prefix + "bias", Tensor({4 * h}))};
        fill_uniform(cell.w_ih.value, bound, rng);
        fill_uniform(cell.w_hh.value, bound, rng);
        fill_uniform(cell.bias.value, bound, rng);
        for (std::size_t j = h; j < 2 * h; ++j) cell.bias.value[j] += 1.0;
        cells_.push_back(std::move(cell));
      }
    }
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 3 || x.dim(2) != spec_.input || x.dim(1) == 0) {
      shape_error(describe(spec_), "(N, T, " + std::to_string(spec_.input) + ")", x);
    }
    const auto n = x.dim(0), steps = x.dim(1), h = spec_.hidden;
    const bool train = mode == Mode::Train;
    if (train) caches_.assign(spec_.layers, {});

    // Per-step (N, features) view of the current layer input.
    std::vector<RowMat> seq(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      seq[t].resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec_.input));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < spec_.input; ++f) seq[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = x.at(i, t, f);
    }

    for (std::size_t l = 0; l < spec_.layers; ++l) {
      std::vector<RowMat> next(steps, RowMat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * h)));
      LayerCache* cache = train ? &caches_[l] : nullptr;
      if (cache) cache->inputs = seq;
      for (std::size_t d = 0; d < 2; ++d) {
        const Cell& cell = cells_[l * 2 + d];
        const auto in = static_cast<Eigen::Index>(seq[0].cols());
        ConstMatMap w_ih(cell.w_ih.value.data(), in, static_cast<Eigen::Index>(4 * h));
        ConstMatMap w_hh(cell.w_hh.value.data(), static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(4 * h));
        ConstVecMap bias(cell.bias.value.data(), static_cast<Eigen::Index>(4 * h));
        RowMat hs = RowMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
        RowMat cs = RowMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
        auto& dir = cache ? cache->dirs[d] : scratch_;
        if (cache) dir.assign(steps, {});
        for (std::size_t s = 0; s < steps; ++s) {
          const auto t = d == 0 ? s : steps - 1 - s;
          RowMat acts = seq[t] * w_ih + hs * w_hh;
          acts.rowwise() += bias;
          const auto H = static_cast<Eigen::Index>(h);
          for (Eigen::Index i = 0; i < acts.rows(); ++i) {
            for (Eigen::Index j = 0; j < H; ++j) {
              acts(i, j) = sigmoid(acts(i, j));
              acts(i, H + j) = sigmoid(acts(i, H + j));
              acts(i, 2 * H + j) = std::tanh(acts(i, 2 * H + j));
              acts(i, 3 * H + j) = sigmoid(acts(i, 3 * H + j));
            }
          }
          RowMat c_prev = cs;
          RowMat h_prev = hs;
          cs = acts.middleCols(H, H).cwiseProduct(c_prev) + acts.leftCols(H).cwiseProduct(acts.middleCols(2 * H, H));
          RowMat tc = cs.unaryExpr([](double v) { return std::tanh(v); });
          hs = acts.rightCols(H).cwiseProduct(tc);
          next[t].middleCols(static_cast<Eigen::Index>(d * h), H) = hs;
          if (cache) dir[s] = StepCache{std::move(acts), std::move(c_prev), std::move(h_prev), std::move(tc)};
        }
      }
      seq = std::move(next);
    }

    Tensor y({n, steps, 2 * h});
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < 2 * h; ++f) y.at(i, t, f) = seq[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
    saved_ = train;
    if (train) input_shape_ = x.shape();
    return y;
  }

  Tensor backward(const Tensor& g) override {
    require_context(saved_, describe(spec_));
    const auto n = input_shape_[0], steps = input_shape_[1], h = spec_.hidden;
    if (g.shape() != Shape{n, steps, 2 * h}) shape_error(describe(spec_) + " backward", "(N, T, 2H)", g);
    const auto H = static_cast<Eigen::Index>(h);
    const auto N = static_cast<Eigen::Index>(n);

    std::vector<RowMat> grad_out(steps, RowMat(N, 2 * H));
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < 2 * h; ++f) grad_out[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = g.at(i, t, f);

    for (std::size_t l = spec_.layers; l-- > 0;) {
      const auto& cache = caches_[l];
      const auto in = cache.inputs[0].cols();
      std::vector<RowMat> grad_in(steps, RowMat::Zero(N, in));
      for (std::size_t d = 0; d < 2; ++d) {
        Cell& cell = cells_[l * 2 + d];
        ConstMatMap w_ih(cell.w_ih.value.data(), in, 4 * H);
        ConstMatMap w_hh(cell.w_hh.value.data(), H, 4 * H);
        MatMap dw_ih(cell.w_ih.grad.data(), in, 4 * H);
        MatMap dw_hh(cell.w_hh.grad.data(), H, 4 * H);
        VecMap dbias(cell.bias.grad.data(), 4 * H);
        RowMat dh_next = RowMat::Zero(N, H);
        RowMat dc_next = RowMat::Zero(N, H);
        for (std::size_t s = steps; s-- > 0;) {
          const auto t = d == 0 ? s : steps - 1 - s;
          const StepCache& sc = cache.dirs[d][s];
          const auto i_g = sc.acts.leftCols(H);
          const auto f_g = sc.acts.middleCols(H, H);
          const auto g_g = sc.acts.middleCols(2 * H, H);
          const auto o_g = sc.acts.rightCols(H);

          RowMat dh = grad_out[t].middleCols(static_cast<Eigen::Index>(d * h), H) + dh_next;
          RowMat dc = dh.cwiseProduct(o_g).cwiseProduct((1.0 - sc.tanh_c.array().square()).matrix()) + dc_next;
          RowMat da(N, 4 * H);
          da.leftCols(H) = dc.cwiseProduct(g_g).cwiseProduct((i_g.array() * (1.0 - i_g.array())).matrix());
          da.middleCols(H, H) = dc.cwiseProduct(sc.c_prev).cwiseProduct((f_g.array() * (1.0 - f_g.array())).matrix());
          da.middleCols(2 * H, H) = dc.cwiseProduct(i_g).cwiseProduct((1.0 - g_g.array().square()).matrix());
          da.rightCols(H) = dh.cwiseProduct(sc.tanh_c).cwiseProduct((o_g.array() * (1.0 - o_g.array())).matrix());

          dw_ih.noalias() += cache.inputs[t].transpose() * da;
          dw_hh.noalias() += sc.h_prev.transpose() * da;
          dbias += da.colwise().sum();
          grad_in[t].noalias() += da * w_ih.transpose();
          dh_next.noalias() = da * w_hh.transpose();
          dc_next = dc.cwiseProduct(f_g);
        }
      }
      grad_out = std::move(grad_in);
    }

    Tensor dx(input_shape_);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < spec_.input; ++f) dx.at(i, t, f) = grad_out[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
    return dx;
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    for (auto& c : cells_) {
      out.push_back(&c.w_ih);
      out.push_back(&c.w_hh);
      out.push_back(&c.bias);
    }
    return out;
  }
  LayerSpec spec() const override { return spec_; }

 private:
  struct Cell {
    Parameter w_ih;
    Parameter w_hh;
    Parameter bias;
  };
  // Gate activations i, f, g, o in column blocks of width hidden.
  struct StepCache {
    RowMat acts;
    RowMat c_prev;
    RowMat h_prev;
    RowMat tanh_c;
  };
  struct LayerCache {
    std::vector<RowMat> inputs;
    // Indexed by processing order, not time.
    std::array<std::vector<StepCache>, 2> dirs;
  };

  BiLstmSpec spec_;
  std::vector<Cell> cells_;  // layer-major, forward then backward direction
  std::vector<LayerCache> caches_;
  std::vector<StepCache> scratch_;
  Shape input_shape_;
  bool saved_ = false;
};

class Flatten final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() < 1) shape_error("Flatten", "(N, ...)", x);
    saved_ = mode == Mode::Train;
    if (saved_) input_shape_ = x.shape();
    const auto n = x.dim(0);
    return x.reshaped({n, n == 0 ? 0 : x.size() / n});
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "Flatten");
    return g.reshaped(input_shape_);
  }
  LayerSpec spec() const override { return FlattenSpec{}; }

 private:
  Shape input_shape_;
  bool saved_ = false;
};

class ToChannels final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 2) shape_error("ToChannels", "(N, D)", x);
    saved_ = mode == Mode::Train;
    if (saved_) input_shape_ = x.shape();
    return x.reshaped({x.dim(0), 1, x.dim(1)});
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "ToChannels");
    return g.reshaped(input_shape_);
  }
  LayerSpec spec() const override { return ToChannelsSpec{}; }

 private:
  Shape input_shape_;
  bool saved_ = false;
};

class ToSequence final : public Layer {
 public:
  explicit ToSequence(ToSequenceSpec s) : spec_(s) {
    if (s.step == 0) throw ConfigError("ToSequence needs a positive step width");
  }
  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 2 || x.dim(1) == 0) shape_error(describe(spec_), "(N, D)", x);
    const auto n = x.dim(0), d = x.dim(1);
    const auto steps = (d + spec_.step - 1) / spec_.step;
    Tensor y({n, steps, spec_.step});
    for (std::size_t i = 0; i < n; ++i) std::copy(x.data() + i * d, x.data() + (i + 1) * d, y.data() + i * steps * spec_.step);
    saved_ = mode == Mode::Train;
    if (saved_) input_shape_ = x.shape();
    return y;
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, describe(spec_));
    const auto n = input_shape_[0], d = input_shape_[1];
    const auto width = g.size() / std::max<std::size_t>(n, 1);
    Tensor dx(input_shape_);
    for (std::size_t i = 0; i < n; ++i) std::copy(g.data() + i * width, g.data() + i * width + d, dx.data() + i * d);
    return dx;
  }
  LayerSpec spec() const override { return spec_; }

 private:
  ToSequenceSpec spec_;
  Shape input_shape_;
  bool saved_ = false;
};

class LastStep final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override {
    if (x.rank() != 3 || x.dim(1) == 0) shape_error("LastStep", "(N, T, F)", x);
    const auto n = x.dim(0), steps = x.dim(1), f = x.dim(2);
    Tensor y({n, f});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) y.at(i, j) = x.at(i, steps - 1, j);
    saved_ = mode == Mode::Train;
    if (saved_) input_shape_ = x.shape();
    return y;
  }
  Tensor backward(const Tensor& g) override {
    require_context(saved_, "LastStep");
    const auto n = input_shape_[0], steps = input_shape_[1], f = input_shape_[2];
    Tensor dx(input_shape_);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) dx.at(i, steps - 1, j) = g.at(i, j);
    return dx;
  }
  LayerSpec spec() const override { return LastStepSpec{}; }

 private:
  Shape input_shape_;
  bool saved_ = false;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::size_t window_output_length(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0 || length < kernel) {
    throw ConfigError("window of kernel " + std::to_string(kernel) + " and stride " + std::to_string(stride) +
                      " does not fit input length " + std::to_string(length));
  }
  return (length - kernel) / stride + 1;
}

std::string describe(const LayerSpec& spec) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const LinearSpec& s) { os << "Linear(" << s.in << "," << s.out << ")"; },
                 [&](const ReluSpec&) { os << "ReLU"; },
                 [&](const SigmoidSpec&) { os << "Sigmoid"; },
                 [&](const SoftmaxSpec&) { os << "Softmax"; },
                 [&](const BatchNormSpec& s) { os << "BatchNorm1d(" << s.features << ")"; },
                 [&](const Conv1dSpec& s) {
                   os << "Conv1D(" << s.in_channels << "," << s.filters << "," << s.kernel << "," << s.stride << ")";
                 },
                 [&](const AvgPool1dSpec& s) { os << "AvgPool1D(" << s.kernel << "," << s.stride << ")"; },
                 [&](const BiLstmSpec& s) { os << "BiLSTM(" << s.input << "," << s.hidden << "," << s.layers << ")"; },
                 [&](const FlattenSpec&) { os << "Flatten"; },
                 [&](const ToChannelsSpec&) { os << "ToChannels"; },
                 [&](const ToSequenceSpec& s) { os << "ToSequence(" << s.step << ")"; },
                 [&](const LastStepSpec&) { os << "LastStep"; },
             },
             spec);
  return os.str();
}

LayerSpec parse_layer_spec(const std::string& text) {
  const auto open = text.find('(');
  const std::string name = text.substr(0, open);
  std::vector<std::size_t> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw FormatError("bad layer spec '" + text + "'");
    std::stringstream ss(text.substr(open + 1, text.size() - open - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(static_cast<std::size_t>(std::stoull(item)));
      } catch (const std::exception&) {
        throw FormatError("bad layer spec '" + text + "'");
      }
    }
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw FormatError("layer spec '" + text + "' needs " + std::to_string(n) + " arguments");
  };
  if (name == "Linear") return want(2), LayerSpec{LinearSpec{args[0], args[1]}};
  if (name == "ReLU") return want(0), LayerSpec{ReluSpec{}};
  if (name == "Sigmoid") return want(0), LayerSpec{SigmoidSpec{}};
  if (name == "Softmax") return want(0), LayerSpec{SoftmaxSpec{}};
  if (name == "BatchNorm1d") return want(1), LayerSpec{BatchNormSpec{args[0]}};
  if (name == "Conv1D") return want(4), LayerSpec{Conv1dSpec{args[0], args[1], args[2], args[3]}};
  if (name == "AvgPool1D") return want(2), LayerSpec{AvgPool1dSpec{args[0], args[1]}};
  if (name == "BiLSTM") return want(3), LayerSpec{BiLstmSpec{args[0], args[1], args[2]}};
  if (name == "Flatten") return want(0), LayerSpec{FlattenSpec{}};
  if (name == "ToChannels") return want(0), LayerSpec{ToChannelsSpec{}};
  if (name == "ToSequence") return want(1), LayerSpec{ToSequenceSpec{args[0]}};
  if (name == "LastStep") return want(0), LayerSpec{LastStepSpec{}};
  throw FormatError("unknown layer '" + name + "'");
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const LinearSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<Linear>(s, rng); },
                        [](const ReluSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Relu>(); },
                        [](const SigmoidSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Sigmoid>(); },
                        [](const SoftmaxSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Softmax>(); },
                        [](const BatchNormSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<BatchNorm>(s); },
                        [&](const Conv1dSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<Conv1d>(s, rng); },
                        [](const AvgPool1dSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<AvgPool1d>(s); },
                        [&](const BiLstmSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<BiLstm>(s, rng); },
                        [](const FlattenSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Flatten>(); },
                        [](const ToChannelsSpec&) -> std::unique_ptr<Layer> { return std::make_unique<ToChannels>(); },
                        [](const ToSequenceSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<ToSequence>(s); },
                        [](const LastStepSpec&) -> std::unique_ptr<Layer> { return std::make_unique<LastStep>(); },
                    },
                    spec);
}

// ---------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& input, Mode mode) {
  Tensor x = input;
  for (auto& layer : layers_) {
    x = layer->forward(x, mode);
    require_finite(x, describe(layer->spec()));
  }
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
    require_finite(g, describe((*it)->spec()) + " backward");
  }
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

std::vector<Tensor*> Sequential::buffers() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (auto* b : l->buffers()) out.push_back(b);
  return out;
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    for (auto* p : l->parameters())
      if (p->trainable) n += p->value.size();
  return n;
}

void Sequential::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || logits.dim(0) == 0) {
    throw ShapeError("cross_entropy: logits " + to_string(logits.shape()) + " vs " + std::to_string(labels.size()) +
                     " labels");
  }
  require_finite(logits, "cross_entropy input");
  const auto n = logits.dim(0), c = logits.dim(1);
  LossResult out{0.0, softmax_rows(logits)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= c) throw InputError("cross_entropy: label out of range");
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(logits.at(i, j) - mx);
    out.loss += (mx + std::log(sum)) - logits.at(i, static_cast<std::size_t>(label));
    out.grad.at(i, static_cast<std::size_t>(label)) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto& g : out.grad.values()) g *= inv;
  if (!std::isfinite(out.loss)) throw NumericError("cross_entropy produced a non-finite loss");
  return out;
}

}  // namespace quintlink::nn
