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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quintlink/layers.hpp"

namespace quintlink::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic "QLCK", u32 version, metadata string, u32 layer count, one
/// spec string per layer, then every parameter followed by every buffer as
/// (name, u32 rank, u64 dims, f64 values, u32 CRC-32 of that tensor record).
/// Strings are u32-length-prefixed; all integers and reals little-endian.
std::vector<std::uint8_t> serialize_model(Sequential& model, const std::string& metadata = {});

struct LoadedModel {
  Sequential model;
  std::string metadata;
};

/// Throws FormatError on bad magic, unknown version, truncation or a checksum mismatch.
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, Sequential& model, const std::string& metadata = {});
LoadedModel load_checkpoint(const std::string& path);

/// Copies parameter values and buffers from one model into a structurally identical one.
void copy_state(Sequential& from, Sequential& to);

}  // namespace quintlink::nn
