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

#include "quintlink/checkpoint.hpp"

#include "quintlink/binary_io.hpp"
#include "quintlink/error.hpp"

namespace quintlink::nn {

namespace {

constexpr std::uint8_t kMagic[4] = {'Q', 'L', 'C', 'K'};

void put_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
  const auto start = w.size();
  w.put_string(name);
  w.put(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) w.put(static_cast<std::uint64_t>(d));
  w.put_doubles(t.values());
  w.put_crc(start);
}

void get_tensor(ByteReader& r, const std::string& expected_name, Tensor& into) {
  const auto start = r.position();
  const auto name = r.get_string();
  if (name != expected_name) throw FormatError("checkpoint tensor '" + name + "' where '" + expected_name + "' expected");
  const auto rank = r.get<std::uint32_t>();
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
  if (shape != into.shape()) {
    throw FormatError("checkpoint tensor '" + name + "' has shape " + to_string(shape) + ", model expects " +
                      to_string(into.shape()));
  }
  auto values = r.get_doubles(into.size());
  if (!r.check_crc(start)) throw FormatError("checksum mismatch in checkpoint tensor '" + name + "'");
  into = Tensor(std::move(shape), std::move(values));
}

std::string buffer_name(std::size_t i) { return "buffer" + std::to_string(i); }

}  // namespace

std::vector<std::uint8_t> serialize_model(Sequential& model, const std::string& metadata) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put(kCheckpointVersion);
  w.put_string(metadata);
  const auto specs = model.specs();
  w.put(static_cast<std::uint32_t>(specs.size()));
  for (const auto& s : specs) w.put_string(describe(s));
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) put_tensor(w, params[i]->name, params[i]->value);
  const auto buffers = model.buffers();
  for (std::size_t i = 0; i < buffers.size(); ++i) put_tensor(w, buffer_name(i), *buffers[i]);
  return w.bytes();
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("not a model checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  LoadedModel out;
  out.metadata = r.get_string();
  const auto count = r.get<std::uint32_t>();
  Rng unused(0);
  for (std::uint32_t i = 0; i < count; ++i) out.model.add(make_layer(parse_layer_spec(r.get_string()), unused));
  const auto params = out.model.parameters();
  for (auto* p : params) get_tensor(r, p->name, p->value);
  const auto buffers = out.model.buffers();
  for (std::size_t i = 0; i < buffers.size(); ++i) get_tensor(r, buffer_name(i), *buffers[i]);
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  return out;
}

void save_checkpoint(const std::string& path, Sequential& model, const std::string& metadata) {
  write_binary_file(path, serialize_model(model, metadata));
}

LoadedModel load_checkpoint(const std::string& path) { return deserialize_model(read_binary_file(path)); }

void copy_state(Sequential& from, Sequential& to) {
  auto pf = from.parameters();
  auto pt = to.parameters();
  auto bf = from.buffers();
  auto bt = to.buffers();
  if (pf.size() != pt.size() || bf.size() != bt.size()) throw StateError("copy_state: models differ in structure");
  for (std::size_t i = 0; i < pf.size(); ++i) {
    if (pf[i]->value.shape() != pt[i]->value.shape()) throw StateError("copy_state: parameter shapes differ");
    pt[i]->value = pf[i]->value;
  }
  for (std::size_t i = 0; i < bf.size(); ++i) *bt[i] = *bf[i];
}

}  // namespace quintlink::nn
