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

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <json.hpp>
#include <thread>

#include "quintlink/embedding.hpp"
#include "quintlink/error.hpp"

namespace quintlink {
namespace {

using nlohmann::json;

constexpr const char* kModel = "all-MiniLM-L6-v2";

// In-process stand-in for the sidecar with scripted failure modes.
class FakeSidecar {
 public:
  FakeSidecar() {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const auto body = json::parse(req.body);
      batch_sizes.push_back(body["texts"].size());
      if (failures_left > 0) {
        --failures_left;
        res.status = 503;
        res.set_content(R"({"error":"busy"})", "application/json");
        return;
      }
      if (body["model"] != kModel) {
        res.status = 404;
        res.set_content(R"({"error":"unknown model"})", "application/json");
        return;
      }
      json vectors = json::array();
      for (const auto& t : body["texts"]) {
        json v = json::array();
        for (std::size_t i = 0; i < dim; ++i) v.push_back(static_cast<double>(t.get<std::string>().size() + i));
        vectors.push_back(v);
      }
      res.set_content(json{{"model", body["model"]}, {"dim", dim}, {"vectors", vectors}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeSidecar() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> requests{0};
  std::atomic<int> failures_left{0};
  std::size_t dim = 384;
  std::vector<std::size_t> batch_sizes;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteOptions fast() {
  RemoteOptions o;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

TEST(RemoteEmbedder, ReturnsVectorsInOrder) {
  FakeSidecar s;
  RemoteEmbedder e(s.endpoint(), kModel, fast());
  const std::vector<std::string> texts{"a", "bbb"};
  const auto out = e.embed(texts);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].dim(), 384u);
  EXPECT_EQ(out[0].values[0], 1.0);
  EXPECT_EQ(out[1].values[2], 5.0);
  EXPECT_EQ(remote_embed("http://" + s.endpoint() + "/", kModel, texts, fast()).size(), 2u);
}

TEST(RemoteEmbedder, RetriesServerErrors) {
  FakeSidecar s;
  s.failures_left = 2;
  RemoteEmbedder e(s.endpoint(), kModel, fast());
  EXPECT_EQ(e.embed(std::vector<std::string>{"x"}).size(), 1u);
  EXPECT_EQ(e.requests_sent(), 3u);
  s.failures_left = 5;
  EXPECT_THROW(e.embed(std::vector<std::string>{"x"}), TransportError);
}

TEST(RemoteEmbedder, SplitsLargeBatches) {
  FakeSidecar s;
  RemoteEmbedder e(s.endpoint(), kModel, fast());
  std::vector<std::string> texts(600, "t");
  EXPECT_EQ(e.embed(texts).size(), 600u);
  EXPECT_EQ(s.batch_sizes, (std::vector<std::size_t>{256, 256, 88}));
}

TEST(RemoteEmbedder, DimensionMismatchIsContractError) {
  FakeSidecar s;
  s.dim = 768;
  RemoteEmbedder e(s.endpoint(), kModel, fast());
  EXPECT_THROW(e.embed(std::vector<std::string>{"x"}), ContractError);
}

TEST(RemoteEmbedder, UnknownModelIsPermanent) {
  FakeSidecar s;
  RemoteEmbedder e(s.endpoint(), "all-distilroberta-v1", fast());
  EXPECT_THROW(e.embed(std::vector<std::string>{"x"}), PermanentError);
  EXPECT_EQ(s.requests, 1);
  EXPECT_THROW(RemoteEmbedder(s.endpoint(), "hash-384"), PermanentError);
}

TEST(RemoteEmbedder, UnreachableEndpointIsTransportError) {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  auto o = fast();
  o.attempts = 2;
  RemoteEmbedder e("127.0.0.1:" + std::to_string(port), kModel, o);
  EXPECT_THROW(e.embed(std::vector<std::string>{"x"}), TransportError);
  EXPECT_EQ(e.requests_sent(), 2u);
}

TEST(RemoteEmbedder, BadEndpointsAndOptions) {
  EXPECT_THROW(RemoteEmbedder("localhost", kModel), ConfigError);
  EXPECT_THROW(RemoteEmbedder("localhost:http", kModel), ConfigError);
  EXPECT_THROW(RemoteEmbedder("localhost:70000", kModel), ConfigError);
  RemoteOptions o;
  o.attempts = 0;
  EXPECT_THROW(RemoteEmbedder("localhost:1", kModel, o), ConfigError);
}

}  // namespace
}  // namespace quintlink
