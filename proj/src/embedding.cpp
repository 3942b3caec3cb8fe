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

#include "quintlink/embedding.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include "quintlink/error.hpp"
#include "quintlink/rng.hpp"

namespace quintlink {

namespace {

constexpr std::array<PretrainedModelInfo, 5> kPretrained{{
    {"distiluse-base-multilingual-cased-v2", 512, 128},
    {"all-distilroberta-v1", 768, 512},
    {"all-MiniLM-L12-v2", 384, 256},
    {"all-MiniLM-L6-v2", 384, 256},
    {"paraphrase-albert-small-v2", 768, 256},
}};

std::optional<std::size_t> parse_suffix_dim(std::string_view model, std::string_view prefix) {
  if (model.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = model.substr(prefix.size());
  std::size_t dim = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || dim < kMinHashDim) return std::nullopt;
  return dim;
}

// Length of the UTF-8 sequence starting with lead byte b; invalid leads count as 1.
std::size_t utf8_length(unsigned char b) {
  if (b < 0x80) return 1;
  if ((b >> 5) == 0x6) return 2;
  if ((b >> 4) == 0xE) return 3;
  if ((b >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

std::span<const PretrainedModelInfo> pretrained_models() noexcept { return kPretrained; }

std::optional<std::size_t> registry_dim(std::string_view model) noexcept {
  for (const auto& m : kPretrained)
    if (m.name == model) return m.dim;
  if (auto d = parse_suffix_dim(model, "hash-")) return d;
  return parse_suffix_dim(model, "baseline-");
}

HashEmbedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < kMinHashDim) throw ConfigError("hash embedding dim must be at least 8, got " + std::to_string(dim));

  std::string lowered(text);
  for (auto& c : lowered) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  // Byte offsets of code point starts, plus the end offset.
  std::vector<std::size_t> starts;
  starts.reserve(lowered.size() + 1);
  for (std::size_t i = 0; i < lowered.size();) {
    starts.push_back(i);
    const auto len = utf8_length(static_cast<unsigned char>(lowered[i]));
    i = std::min(lowered.size(), i + len);
  }
  const std::size_t points = starts.size();
  starts.push_back(lowered.size());

  HashEmbedding out;
  out.vector.values.assign(dim, 0.0);
  auto& v = out.vector.values;
  std::size_t grams = 0;
  for (std::size_t n = 3; n <= 5; ++n) {
    for (std::size_t i = 0; i + n <= points; ++i) {
      const std::string_view gram(lowered.data() + starts[i], starts[i + n] - starts[i]);
      const std::uint64_t h = mix64(fnv1a64(gram) ^ seed);
      v[h % dim] += (h >> 63) ? -1.0 : 1.0;
      ++grams;
    }
  }
  if (grams == 0) {
    out.empty = true;
    return out;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  // Opposite-signed collisions can cancel every bucket.
  if (norm == 0.0) {
    out.empty = true;
    return out;
  }
  for (auto& x : v) x /= norm;
  return out;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed), model_("hash-" + std::to_string(dim)) {
  if (dim < kMinHashDim) throw ConfigError("hash embedding dim must be at least 8, got " + std::to_string(dim));
}

std::vector<EmbeddingVector> HashEmbedder::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto h = hash_embed(t, dim_, seed_);
    if (h.empty) ++empty_count_;
    out.push_back(std::move(h.vector));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

namespace {
constexpr std::uint32_t kCacheMagic = 0x43454C51;  // "QLEC"
constexpr std::size_t kMaxModelName = 4096;
constexpr std::size_t kMaxCachedDim = 1u << 20;
}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
  std::size_t good_end = 0;
  if (std::filesystem::exists(*file_)) {
    const auto bytes = read_binary_file(file_->string());
    ByteReader r(bytes);
    while (!r.at_end()) {
      const auto start = r.position();
      try {
        if (r.get<std::uint32_t>() != kCacheMagic) break;
        auto model = r.get_string(kMaxModelName);
        Sha256Digest digest;
        auto raw = r.get_bytes(digest.size());
        std::copy(raw.begin(), raw.end(), digest.begin());
        const auto dim = r.get<std::uint32_t>();
        if (dim == 0 || dim > kMaxCachedDim) break;
        EmbeddingVector vec{r.get_doubles(dim)};
        if (!r.check_crc(start)) break;
        entries_.insert_or_assign(Key{std::move(model), digest}, std::move(vec));
        good_end = r.position();
      } catch (const FormatError&) {
        break;
      }
    }
    if (good_end < bytes.size()) {
      discarded_bytes_ = bytes.size() - good_end;
      std::filesystem::resize_file(*file_, good_end);
    }
  }
  out_.open(*file_, std::ios::binary | std::ios::app);
  if (!out_) throw InputError("cannot open embedding cache " + file_->string());
}

std::optional<EmbeddingVector> EmbeddingCache::get(std::string_view model, std::string_view text) const {
  Key key{std::string(model), sha256(text)};
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(std::string_view model, std::string_view text, const EmbeddingVector& vector) {
  if (vector.dim() == 0 || vector.dim() > kMaxCachedDim) throw InputError("cannot cache a vector of this dim");
  Key key{std::string(model), sha256(text)};
  std::unique_lock lock(mutex_);
  if (file_) {
    ByteWriter w;
    w.put(kCacheMagic);
    w.put_string(model);
    w.put_bytes(key.second);
    w.put(static_cast<std::uint32_t>(vector.dim()));
    w.put_doubles(vector.values);
    w.put_crc();
    out_.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.size()));
    out_.flush();
    if (!out_) throw InputError("write to embedding cache failed");
  }
  entries_.insert_or_assign(std::move(key), vector);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Dataset embedding

namespace {

// Re-throws the in-flight library error with extra context, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const TransportError& e) {
    throw TransportError(context + e.what());
  } catch (const PermanentError& e) {
    throw PermanentError(context + e.what());
  } catch (const ContractError& e) {
    throw ContractError(context + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(context + e.what());
  } catch (const Error& e) {
    throw Error(context + e.what());
  }
}

constexpr std::size_t kEmbedChunk = 256;

}  // namespace

EmbeddedDataset embed_dataset(std::span<const LabeledQuintuplet> records, const KnowledgeGraph& graph,
                              const TemplateSet& templates, Embedder& embedder, EmbeddingCache* cache) {
  EmbeddedDataset out;
  auto& m = out.matrix;
  m.rows = records.size();
  m.cols = embedder.dim();
  m.values.assign(m.rows * m.cols, 0.0);
  m.labels.resize(m.rows);

  std::vector<std::string> texts(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    texts[i] = verbalize(records[i].quintuplet, graph, templates.for_kind(records[i].quintuplet.kind));
    m.labels[i] = records[i].label == Label::Positive ? 1 : 0;
  }

  // Unique texts still missing after the cache lookup, with the rows they fill.
  std::vector<std::string> pending;
  std::vector<std::vector<std::size_t>> pending_rows;
  std::unordered_map<std::string_view, std::size_t> pending_index;

  auto place = [&](std::size_t row, const EmbeddingVector& v) {
    if (v.dim() != m.cols) {
      throw ContractError("record " + std::to_string(row) + ": embedder returned dim " + std::to_string(v.dim()) +
                          ", expected " + std::to_string(m.cols));
    }
    for (double x : v.values) {
      if (!std::isfinite(x)) throw ContractError("record " + std::to_string(row) + ": non-finite embedding value");
    }
    std::copy(v.values.begin(), v.values.end(), m.row(row).begin());
    bool zero = true;
    for (double x : v.values) zero = zero && x == 0.0;
    if (zero) ++out.stats.zero_vectors;
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto it = pending_index.find(texts[i]); it != pending_index.end()) {
      pending_rows[it->second].push_back(i);
      continue;
    }
    if (cache) {
      if (auto hit = cache->get(embedder.model(), texts[i])) {
        ++out.stats.cache_hits;
        place(i, *hit);
        continue;
      }
    }
    pending_index.emplace(texts[i], pending.size());
    pending.push_back(texts[i]);
    pending_rows.push_back({i});
  }

  for (std::size_t begin = 0; begin < pending.size(); begin += kEmbedChunk) {
    const auto end = std::min(pending.size(), begin + kEmbedChunk);
    std::span<const std::string> batch(pending.data() + begin, end - begin);
    std::vector<EmbeddingVector> vectors;
    try {
      ++out.stats.embedder_calls;
      vectors = embedder.embed(batch);
      if (vectors.size() != batch.size()) {
        throw ContractError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(batch.size()) + " texts");
      }
    } catch (const Error&) {
      rethrow_with_context("embedding record " + std::to_string(pending_rows[begin].front()) + ": ");
    }
    out.stats.texts_embedded += batch.size();
    for (std::size_t k = 0; k < batch.size(); ++k) {
      for (auto row : pending_rows[begin + k]) place(row, vectors[k]);
      if (cache) cache->put(embedder.model(), batch[k], vectors[k]);
    }
  }
  return out;
}

}  // namespace quintlink
