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

#include "quintlink/features.hpp"

#include "quintlink/binary_io.hpp"

namespace quintlink {

namespace {
constexpr std::uint32_t kMatrixMagic = 0x4D464C51;  // "QLFM"
constexpr std::uint32_t kMatrixVersion = 1;
}  // namespace

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.rows = indices.size();
  out.cols = cols;
  out.values.reserve(out.rows * cols);
  out.labels.reserve(out.rows);
  for (auto i : indices) {
    if (i >= rows) throw InputError("row index " + std::to_string(i) + " out of range");
    auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

void write_feature_matrix(const std::string& path, const FeatureMatrix& m) {
  if (m.values.size() != m.rows * m.cols || m.labels.size() != m.rows) {
    throw InputError("feature matrix is internally inconsistent");
  }
  ByteWriter w;
  w.put(kMatrixMagic);
  w.put(kMatrixVersion);
  w.put(static_cast<std::uint64_t>(m.rows));
  w.put(static_cast<std::uint64_t>(m.cols));
  w.put_doubles(m.values);
  for (int l : m.labels) w.put(static_cast<std::int32_t>(l));
  w.put_crc();
  write_binary_file(path, w.bytes());
}

FeatureMatrix read_feature_matrix(const std::string& path) {
  const auto bytes = read_binary_file(path);
  ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kMatrixMagic) throw FormatError(path + ": not a feature matrix file");
  if (const auto v = r.get<std::uint32_t>(); v != kMatrixVersion) {
    throw FormatError(path + ": unsupported matrix version " + std::to_string(v));
  }
  FeatureMatrix m;
  m.rows = r.get<std::uint64_t>();
  m.cols = r.get<std::uint64_t>();
  if (m.cols != 0 && m.rows > r.remaining() / (m.cols * sizeof(double))) throw FormatError(path + ": truncated");
  m.values = r.get_doubles(m.rows * m.cols);
  m.labels.resize(m.rows);
  for (auto& l : m.labels) l = r.get<std::int32_t>();
  if (!r.check_crc(0)) throw FormatError(path + ": checksum mismatch");
  return m;
}

}  // namespace quintlink
