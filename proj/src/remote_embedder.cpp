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

#include <httplib.h>

#include <cmath>
#include <json.hpp>
#include <thread>

#include "quintlink/embedding.hpp"
#include "quintlink/error.hpp"

namespace quintlink {

namespace {

using nlohmann::json;

struct HostPort {
  std::string host;
  int port;
};

HostPort parse_endpoint(std::string endpoint) {
  constexpr std::string_view scheme = "http://";
  if (endpoint.rfind(scheme, 0) == 0) endpoint.erase(0, scheme.size());
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
    throw ConfigError("embedding endpoint must look like host:port, got '" + endpoint + "'");
  }
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in embedding endpoint '" + endpoint + "'");
  }
  if (port <= 0 || port > 65535) throw ConfigError("bad port in embedding endpoint '" + endpoint + "'");
  return {endpoint.substr(0, colon), port};
}

std::string error_body(const httplib::Result& res) {
  try {
    auto j = json::parse(res->body);
    if (j.is_object() && j.contains("error")) return j["error"].dump();
  } catch (const json::exception&) {
  }
  return res->body.substr(0, 200);
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, RemoteOptions options)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), options_(options) {
  auto dim = registry_dim(model_);
  bool pretrained = false;
  for (const auto& m : pretrained_models()) pretrained = pretrained || m.name == model_;
  if (!dim || !pretrained) throw PermanentError("model '" + model_ + "' is not a served pretrained model");
  dim_ = *dim;
  if (options_.attempts < 1) throw ConfigError("remote embedder needs at least one attempt");
  if (options_.max_batch == 0) throw ConfigError("remote embedder max_batch must be positive");
  parse_endpoint(endpoint_);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += options_.max_batch) {
    const auto n = std::min(options_.max_batch, texts.size() - begin);
    auto part = embed_batch(texts.subspan(begin, n));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  const auto [host, port] = parse_endpoint(endpoint_);
  httplib::Client client(host, port);
  const auto secs = options_.timeout.count() / 1000;
  const auto usecs = (options_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const std::string body = json{{"model", model_}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump();

  std::string last_failure;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    ++requests_;
    auto res = client.Post("/embed", body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
    } else if (res->status >= 500) {
      last_failure = "server error " + std::to_string(res->status) + ": " + error_body(res);
    } else if (res->status == 404) {
      throw PermanentError("sidecar does not know model '" + model_ + "': " + error_body(res));
    } else if (res->status != 200) {
      throw PermanentError("sidecar rejected request with status " + std::to_string(res->status) + ": " +
                           error_body(res));
    } else {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::exception& e) {
        throw ContractError(std::string("sidecar reply is not JSON: ") + e.what());
      }
      if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array()) {
        throw ContractError("sidecar reply lacks a vectors array");
      }
      if (reply.contains("dim") && reply["dim"].is_number_integer() && reply["dim"].get<std::size_t>() != dim_) {
        throw ContractError("sidecar reports dim " + reply["dim"].dump() + " for " + model_ + ", registry says " +
                            std::to_string(dim_));
      }
      const auto& vectors = reply["vectors"];
      if (vectors.size() != texts.size()) {
        throw ContractError("sidecar returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
      }
      std::vector<EmbeddingVector> out;
      out.reserve(vectors.size());
      for (const auto& v : vectors) {
        if (!v.is_array() || v.size() != dim_) {
          throw ContractError("sidecar vector has dim " + std::to_string(v.is_array() ? v.size() : 0) +
                              ", registry says " + std::to_string(dim_) + " for " + model_);
        }
        EmbeddingVector e;
        e.values.reserve(dim_);
        for (const auto& x : v) {
          if (!x.is_number()) throw ContractError("sidecar vector holds a non-number");
          const double d = x.get<double>();
          if (!std::isfinite(d)) throw ContractError("sidecar vector holds a non-finite value");
          e.values.push_back(d);
        }
        out.push_back(std::move(e));
      }
      return out;
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("embedding request failed after " + std::to_string(options_.attempts) +
                       " attempts: " + last_failure);
}

std::vector<EmbeddingVector> remote_embed(const std::string& endpoint, const std::string& model,
                                          std::span<const std::string> texts, RemoteOptions options) {
  RemoteEmbedder embedder(endpoint, model, options);
  return embedder.embed(texts);
}

}  // namespace quintlink
