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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quintlink {

/// Flat "key = value" settings. Lines starting with '#' and blank lines are
/// ignored; whitespace around keys and values is trimmed.
class Config {
 public:
  /// Throws ConfigError on a line without '=', an empty key or a repeated key.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  bool has(std::string_view key) const { return entries_.find(key) != entries_.end(); }
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key, double fallback) const;
  /// true/false, yes/no, on/off, 1/0.
  bool get_bool(std::string_view key, bool fallback) const;
  /// Comma-separated items, trimmed, empty items dropped.
  std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return entries_; }

  /// Throws ConfigError naming the first key not in `known`.
  void require_known(std::span<const std::string_view> known) const;

  /// Serialized form, one sorted "key = value" line per entry.
  std::string to_text() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace quintlink
