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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quintlink/features.hpp"
#include "quintlink/layers.hpp"

namespace quintlink {

enum class Architecture { ANN, CNN1D, LogReg, LSTM, AutoEncoder };

inline constexpr std::array<Architecture, 5> kAllArchitectures = {
    Architecture::ANN, Architecture::CNN1D, Architecture::LogReg, Architecture::LSTM, Architecture::AutoEncoder};

std::string_view to_string(Architecture a) noexcept;
/// Accepts the names printed by to_string, case-insensitively. Throws ConfigError.
Architecture parse_architecture(std::string_view name);

enum class OutputHead { Softmax, Sigmoid };

/// Layer stack producing the two training logits, without the output head.
std::vector<nn::LayerSpec> architecture_layers(Architecture arch, std::size_t input_dim);

/// A classifier: the logit body plus the output head applied at predict time.
class Model {
 public:
  /// Throws ConfigError when the architecture cannot consume input_dim.
  Model(Architecture arch, std::size_t input_dim, std::uint64_t seed);
  Model(Architecture arch, std::size_t input_dim, nn::Sequential body);

  Architecture architecture() const noexcept { return arch_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  OutputHead head() const noexcept { return head_; }
  nn::Sequential& body() noexcept { return body_; }
  std::size_t parameter_count() const { return body_.parameter_count(); }
  /// Layer descriptions including the head, e.g. {"Linear(384,200)", "Linear(200,2)", "Sigmoid"}.
  std::vector<std::string> layer_names() const;

  void save(const std::string& path);
  static Model load(const std::string& path);

 private:
  Architecture arch_;
  std::size_t input_dim_;
  OutputHead head_;
  nn::Sequential body_;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  /// Throws ConfigError on a zero batch size, non-positive rate, zero patience or zero epochs.
  void validate() const;
};

enum class StopReason { EarlyStop, MaxEpochs };
std::string_view to_string(StopReason r) noexcept;

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t stop_epoch = 0;  // 1-based
  StopReason stop_reason = StopReason::MaxEpochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;

  /// "epoch,train_loss,val_loss" followed by one line per epoch.
  std::string to_csv() const;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

/// Counts consecutive epochs where train loss fell and val loss rose
/// relative to the previous epoch; fires once the count reaches patience.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(double train_loss, double val_loss);
  std::size_t streak() const noexcept { return streak_; }

 private:
  std::size_t patience_;
  std::size_t streak_ = 0;
  std::optional<double> prev_train_;
  std::optional<double> prev_val_;
};

/// Mini-batch Adam on cross-entropy, early stopping, then restores the
/// weights from the epoch with the lowest validation loss.
/// Throws InputError on empty or dim-mismatched data, NumericError naming the epoch on divergence.
TrainHistory train(Model& model, const FeatureMatrix& train_set, const FeatureMatrix& val_set, const TrainConfig& config);

/// Eval-mode mean cross-entropy over a whole matrix.
double evaluate_loss(Model& model, const FeatureMatrix& data);

struct Prediction {
  nn::Tensor scores;  // (N, 2)
  std::vector<int> labels;
};

/// Output-head scores and argmax labels (ties go to class 0). Throws ShapeError on a dim mismatch.
Prediction predict(Model& model, const FeatureMatrix& data);

}  // namespace quintlink
