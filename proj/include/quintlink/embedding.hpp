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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quintlink/binary_io.hpp"
#include "quintlink/features.hpp"
#include "quintlink/kg.hpp"
#include "quintlink/quintuplet.hpp"
#include "quintlink/verbalizer.hpp"

namespace quintlink {

/// Fixed-length real vector. All values are finite.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

struct PretrainedModelInfo {
  std::string_view name;
  std::size_t dim;
  std::size_t max_seq_len;
};

/// The five sentence-embedding models the sidecar serves.
std::span<const PretrainedModelInfo> pretrained_models() noexcept;

/// Output dimension for a model name: one of the pretrained models, or
/// "hash-<dim>" / "baseline-<dim>" for the local featurizers.
std::optional<std::size_t> registry_dim(std::string_view model) noexcept;

inline constexpr std::size_t kMinHashDim = 8;

struct HashEmbedding {
  EmbeddingVector vector;
  /// True when the text had no 3-gram; the vector is then all zeros.
  bool empty = false;
};

/// Signed feature hashing of character 3..5-grams (code points) of the
/// ASCII-lower-cased text into `dim` buckets, then L2 normalization.
/// Gram g lands in bucket h % dim with sign +1 if the top bit of h is clear,
/// where h = mix64(fnv1a64(utf8(g)) ^ seed). Throws ConfigError if dim < 8.
HashEmbedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// Text-to-vector contract shared by all embedders.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const std::string& model() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  /// One vector per text, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

class HashEmbedder final : public Embedder {
 public:
  HashEmbedder(std::size_t dim, std::uint64_t seed);

  const std::string& model() const noexcept override { return model_; }
  std::size_t dim() const noexcept override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  /// Number of texts that produced the zero vector so far.
  std::size_t empty_count() const noexcept { return empty_count_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::string model_;
  std::size_t empty_count_ = 0;
};

struct RemoteOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 256;
};

/// Client for the sidecar's POST /embed. Transport failures and 5xx replies
/// are retried with exponential backoff and surface as TransportError once
/// attempts run out; 4xx replies raise PermanentError; a reply whose shape or
/// dimension disagrees with the registry raises ContractError.
class RemoteEmbedder final : public Embedder {
 public:
  /// endpoint: "host:port" or "http://host:port".
  RemoteEmbedder(std::string endpoint, std::string model, RemoteOptions options = {});

  const std::string& model() const noexcept override { return model_; }
  std::size_t dim() const noexcept override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  std::size_t requests_sent() const noexcept { return requests_; }

 private:
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

  std::string endpoint_;
  std::string model_;
  std::size_t dim_;
  RemoteOptions options_;
  std::size_t requests_ = 0;
};

/// Calls the sidecar once and returns the texts' vectors.
std::vector<EmbeddingVector> remote_embed(const std::string& endpoint, const std::string& model,
                                          std::span<const std::string> texts, RemoteOptions options = {});

/// Persistent vector cache keyed by (model, SHA-256 of the text).
///
/// File layout, one append-only record per entry:
///   u32 magic "QLEC", u32 model length, model bytes, 32-byte digest,
///   u32 dim, dim little-endian f64, u32 CRC-32 over the record so far.
/// Opening a file stops at the first damaged record and truncates it away.
class EmbeddingCache {
 public:
  /// Memory-only cache.
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path file);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<EmbeddingVector> get(std::string_view model, std::string_view text) const;
  void put(std::string_view model, std::string_view text, const EmbeddingVector& vector);

  std::size_t size() const;
  /// Bytes dropped from a damaged tail when the file was opened.
  std::size_t discarded_bytes() const noexcept { return discarded_bytes_; }

 private:
  using Key = std::pair<std::string, Sha256Digest>;

  mutable std::shared_mutex mutex_;
  std::map<Key, EmbeddingVector, std::less<>> entries_;
  std::optional<std::filesystem::path> file_;
  std::ofstream out_;
  std::size_t discarded_bytes_ = 0;
};

struct EmbedStats {
  std::size_t embedder_calls = 0;
  std::size_t texts_embedded = 0;
  std::size_t cache_hits = 0;
  std::size_t zero_vectors = 0;
};

struct EmbeddedDataset {
  FeatureMatrix matrix;
  EmbedStats stats;
};

/// Row i is the embedding of verbalize(records[i]); label 1 for positives.
/// Cached vectors are used without calling the embedder; new vectors are
/// written back to the cache. Embedder errors are re-thrown with the index
/// of the first record in the failing batch.
EmbeddedDataset embed_dataset(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph,
                              const TemplateSet& templates, Embedder& embedder, EmbeddingCache* cache);

}  // namespace quintlink
