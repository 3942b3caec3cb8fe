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
#include <span>
#include <string>
#include <vector>

namespace quintlink {

/// Row-major design matrix with one 0/1 label per row (1 = positive).
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<int> labels;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }

  /// Rows picked by index, in the given order.
  FeatureMatrix select(std::span<const std::size_t> indices) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Binary matrix file: magic "QLFM", u32 version, u64 rows, u64 cols,
/// rows*cols little-endian f64, rows i32 labels, u32 CRC-32 of all prior bytes.
void write_feature_matrix(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_feature_matrix(const std::string& path);

}  // namespace quintlink
