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

#include "quintlink/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "quintlink/checkpoint.hpp"
#include "quintlink/error.hpp"
#include "quintlink/optim.hpp"
#include "quintlink/rng.hpp"

namespace quintlink {

using nn::LayerSpec;
using nn::Mode;
using nn::Tensor;

std::string_view to_string(Architecture a) noexcept {
  switch (a) {
    case Architecture::ANN: return "ANN";
    case Architecture::CNN1D: return "CNN1D";
    case Architecture::LogReg: return "LogReg";
    case Architecture::LSTM: return "LSTM";
    case Architecture::AutoEncoder: return "AutoEncoder";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const auto want = lower(name);
  for (auto a : kAllArchitectures)
    if (lower(to_string(a)) == want) return a;
  if (want == "cnn") return Architecture::CNN1D;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

std::string_view to_string(StopReason r) noexcept {
  return r == StopReason::EarlyStop ? "early_stop" : "max_epochs";
}

std::vector<LayerSpec> architecture_layers(Architecture arch, std::size_t d) {
  if (d == 0) throw ConfigError("input dimension must be positive");
  using namespace nn;
  std::vector<LayerSpec> out;
  switch (arch) {
    case Architecture::ANN: {
      std::size_t in = d;
      for (int i = 0; i < 3; ++i) {
        out.insert(out.end(), {LinearSpec{in, 300}, BatchNormSpec{300}, ReluSpec{}});
        in = 300;
      }
      out.push_back(LinearSpec{300, 2});
      break;
    }
    case Architecture::CNN1D: {
      std::size_t len = d;
      auto block = [&](std::size_t in_ch, std::size_t filters, std::size_t stride) {
        try {
          len = window_output_length(len, 7, stride);
          len = window_output_length(len, 7, stride);
        } catch (const ConfigError&) {
          throw ConfigError("CNN1D cannot consume input dimension " + std::to_string(d) +
                            ": convolution/pooling windows no longer fit");
        }
        out.insert(out.end(), {Conv1dSpec{in_ch, filters, 7, stride}, ReluSpec{}, AvgPool1dSpec{7, stride},
                               BatchNormSpec{filters}});
      };
      out.push_back(ToChannelsSpec{});
      block(1, 32, 2);
      block(32, 64, 1);
      block(64, 64, 1);
      out.insert(out.end(), {FlattenSpec{}, LinearSpec{64 * len, 2}});
      break;
    }
    case Architecture::LogReg:
      out = {LinearSpec{d, 200}, LinearSpec{200, 2}};
      break;
    case Architecture::LSTM:
      out = {ToSequenceSpec{16}, BiLstmSpec{16, 16, 2}, LastStepSpec{}, LinearSpec{32, 2}};
      break;
    case Architecture::AutoEncoder:
      out = {LinearSpec{d, 96}, ReluSpec{}, LinearSpec{96, 48}, ReluSpec{}, LinearSpec{48, 48}, ReluSpec{},
             LinearSpec{48, 96}, ReluSpec{}, LinearSpec{96, 2}};
      break;
  }
  return out;
}

namespace {

OutputHead head_for(Architecture a) { return a == Architecture::LogReg ? OutputHead::Sigmoid : OutputHead::Softmax; }

std::string metadata_for(Architecture a, std::size_t dim) {
  return "arch=" + std::string(to_string(a)) + ";input_dim=" + std::to_string(dim);
}

Tensor batch_tensor(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  Tensor t({rows.size(), m.cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto r = m.row(rows[i]);
    std::copy(r.begin(), r.end(), t.data() + i * m.cols);
  }
  return t;
}

void require_compatible(const Model& model, const FeatureMatrix& m, const char* what) {
  if (m.cols != model.input_dim()) {
    throw ShapeError(std::string(what) + " has " + std::to_string(m.cols) + " features, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (m.values.size() != m.rows * m.cols || m.labels.size() != m.rows) {
    throw InputError(std::string(what) + " matrix is internally inconsistent");
  }
}

constexpr std::size_t kEvalChunk = 512;

// Eval-mode logits for all rows, in chunks to bound memory.
Tensor all_logits(Model& model, const FeatureMatrix& m) {
  Tensor out({m.rows, 2});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < m.rows; start += kEvalChunk) {
    const auto end = std::min(m.rows, start + kEvalChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor logits = model.body().forward(batch_tensor(m, idx), Mode::Eval);
    std::copy(logits.data(), logits.data() + logits.size(), out.data() + start * 2);
  }
  return out;
}

std::vector<Tensor> snapshot(nn::Sequential& s) {
  std::vector<Tensor> out;
  for (auto* p : s.parameters()) out.push_back(p->value);
  for (auto* b : s.buffers()) out.push_back(*b);
  return out;
}

void restore(nn::Sequential& s, const std::vector<Tensor>& snap) {
  std::size_t k = 0;
  for (auto* p : s.parameters()) p->value = snap[k++];
  for (auto* b : s.buffers()) *b = snap[k++];
}

}  // namespace

Model::Model(Architecture arch, std::size_t input_dim, std::uint64_t seed)
    : arch_(arch), input_dim_(input_dim), head_(head_for(arch)) {
  Rng rng(derive_seed(seed, "init"));
  for (const auto& spec : architecture_layers(arch, input_dim)) body_.add(nn::make_layer(spec, rng));
}

Model::Model(Architecture arch, std::size_t input_dim, nn::Sequential body)
    : arch_(arch), input_dim_(input_dim), head_(head_for(arch)), body_(std::move(body)) {
  std::vector<std::string> want, got;
  for (const auto& s : architecture_layers(arch, input_dim)) want.push_back(nn::describe(s));
  for (const auto& s : body_.specs()) got.push_back(nn::describe(s));
  if (want != got) throw FormatError("layer stack does not match " + std::string(to_string(arch)));
}

std::vector<std::string> Model::layer_names() const {
  std::vector<std::string> out;
  for (const auto& s : body_.specs()) out.push_back(nn::describe(s));
  out.emplace_back(head_ == OutputHead::Sigmoid ? "Sigmoid" : "Softmax");
  return out;
}

void Model::save(const std::string& path) { nn::save_checkpoint(path, body_, metadata_for(arch_, input_dim_)); }

Model Model::load(const std::string& path) {
  auto loaded = nn::load_checkpoint(path);
  const auto& md = loaded.metadata;
  const auto a = md.find("arch="), semi = md.find(';'), d = md.find("input_dim=");
  if (a != 0 || semi == std::string::npos || d == std::string::npos) {
    throw FormatError("checkpoint metadata '" + md + "' lacks architecture");
  }
  const auto arch = parse_architecture(md.substr(5, semi - 5));
  std::size_t dim = 0;
  try {
    dim = static_cast<std::size_t>(std::stoull(md.substr(d + 10)));
  } catch (const std::exception&) {
    throw FormatError("checkpoint metadata '" + md + "' has a bad input_dim");
  }
  return Model(arch, dim, std::move(loaded.model));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (max_epochs == 0) throw ConfigError("max epochs must be at least 1");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < train_loss.size(); ++i) os << (i + 1) << ',' << train_loss[i] << ',' << val_loss[i] << '\n';
  return os.str();
}

bool EarlyStopper::update(double train_loss, double val_loss) {
  if (prev_train_ && train_loss < *prev_train_ && val_loss > *prev_val_) {
    ++streak_;
  } else {
    streak_ = 0;
  }
  prev_train_ = train_loss;
  prev_val_ = val_loss;
  return streak_ >= patience_;
}

double evaluate_loss(Model& model, const FeatureMatrix& data) {
  require_compatible(model, data, "evaluation set");
  if (data.rows == 0) throw InputError("evaluation set is empty");
  return nn::cross_entropy(all_logits(model, data), data.labels).loss;
}

TrainHistory train(Model& model, const FeatureMatrix& train_set, const FeatureMatrix& val_set,
                   const TrainConfig& config) {
  config.validate();
  if (train_set.rows == 0 || val_set.rows == 0) throw InputError("training and validation sets must be non-empty");
  require_compatible(model, train_set, "training set");
  require_compatible(model, val_set, "validation set");

  auto& body = model.body();
  body.zero_grad();
  nn::Adam adam(body.parameters(), config.learning_rate);
  EarlyStopper stopper(config.patience);
  TrainHistory history;
  std::vector<Tensor> best;
  std::vector<std::size_t> order(train_set.rows);
  std::vector<int> labels;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double total = 0.0;
    double val_loss = 0.0;
    try {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(config.seed, "epoch", epoch));
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const auto end = std::min(order.size(), start + config.batch_size);
        std::span<const std::size_t> rows(order.data() + start, end - start);
        labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train_set.labels[rows[i]];
        auto loss = nn::cross_entropy(body.forward(batch_tensor(train_set, rows), Mode::Train), labels);
        body.backward(loss.grad);
        adam.step();
        total += loss.loss * static_cast<double>(rows.size());
      }
      val_loss = evaluate_loss(model, val_set);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const double train_loss = total / static_cast<double>(train_set.rows);
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);
    history.stop_epoch = epoch;
    if (best.empty() || val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      best = snapshot(body);
    }
    if (stopper.update(train_loss, val_loss)) {
      history.stop_reason = StopReason::EarlyStop;
      break;
    }
  }
  restore(body, best);
  return history;
}

Prediction predict(Model& model, const FeatureMatrix& data) {
  if (data.cols != model.input_dim()) {
    throw ShapeError("prediction input has " + std::to_string(data.cols) + " features, model expects " +
                     std::to_string(model.input_dim()));
  }
  Prediction out{all_logits(model, data), std::vector<int>(data.rows, 0)};
  for (std::size_t i = 0; i < data.rows; ++i) {
    double& a = out.scores.at(i, 0);
    double& b = out.scores.at(i, 1);
    if (model.head() == OutputHead::Sigmoid) {
      a = 1.0 / (1.0 + std::exp(-a));
      b = 1.0 / (1.0 + std::exp(-b));
    } else {
      const double m = std::max(a, b);
      const double ea = std::exp(a - m), eb = std::exp(b - m);
      a = ea / (ea + eb);
      b = eb / (ea + eb);
    }
    out.labels[i] = b > a ? 1 : 0;
  }
  return out;
}

}  // namespace quintlink
