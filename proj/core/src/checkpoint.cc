// Copyright 2026 The STT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stt/checkpoint.h"

#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "stt/byte_io.h"
#include "stt/error.h"
#include "stt/feature_store.h"

namespace stt::train {
namespace {

using nlohmann::json;

void PutTensor(io::ByteWriter& w, const std::string& name, const Tensor<float>& t) {
  if (name.size() > 0xffff) throw ContractError("tensor name too long: " + name);
  if (t.rank() > 0xff) throw ContractError("tensor rank too large: " + name);
  w.Put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
  w.PutString(name);
  w.Put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.Put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (float x : t.data()) w.Put<float>(x);
}

std::pair<std::string, Tensor<float>> GetTensor(io::ByteReader& r) {
  const std::size_t start = r.offset();
  const auto name_len = r.Get<std::uint16_t>("tensor name length");
  std::string name = r.GetString(name_len, "tensor name");
  const auto rank = r.Get<std::uint8_t>("tensor rank");
  if (rank == 0) throw FormatError("tensor '" + name + "' has rank 0", start);
  Shape shape;
  std::size_t count = 1;
  for (std::uint8_t k = 0; k < rank; ++k) {
    const auto d = r.Get<std::uint32_t>("tensor dim");
    if (d == 0) throw FormatError("tensor '" + name + "' has a zero dimension", r.offset() - 4);
    shape.push_back(d);
    count *= d;
  }
  r.Require(count * sizeof(float), "tensor data");
  std::vector<float> data(count);
  for (float& x : data) x = r.Get<float>("tensor data");
  return {std::move(name), Tensor<float>(std::move(shape), std::move(data))};
}

}  // namespace

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.PutString("STTC");
  w.Put<std::uint32_t>(kCheckpointVersion);
  json header = model::ToJson(ckpt.hyper);
  header["checkpoint"] = {{"epoch", ckpt.epoch}, {"vocab_hash", ckpt.vocab_hash}};
  const std::string text = header.dump();
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.PutString(text);

  const auto named = ckpt.params.Named();
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) PutTensor(w, name, *t);

  w.Put<std::uint8_t>(ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    const AdamState& a = *ckpt.adam;
    w.Put<std::uint64_t>(a.step);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(2 * a.names.size()));
    for (std::size_t i = 0; i < a.names.size(); ++i) PutTensor(w, "m/" + a.names[i], a.m[i]);
    for (std::size_t i = 0; i < a.names.size(); ++i) PutTensor(w, "v/" + a.names[i], a.v[i]);
  }
  return std::move(w.bytes());
}

Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.GetString(4, "magic") != "STTC") throw FormatError("bad magic, expected STTC", 0);
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("checkpoint version {} unsupported (expected {})", version,
                                  kCheckpointVersion),
                      4);
  }
  const auto json_len = r.Get<std::uint32_t>("header length");
  const std::size_t json_offset = r.offset();
  const std::string text = r.GetString(json_len, "header");

  Checkpoint ckpt;
  try {
    json header = json::parse(text);
    if (!header.contains("checkpoint")) throw FormatError("header lacks checkpoint block", json_offset);
    const json meta = header["checkpoint"];
    header.erase("checkpoint");
    ckpt.epoch = meta.at("epoch").get<std::uint64_t>();
    ckpt.vocab_hash = meta.at("vocab_hash").get<std::uint64_t>();
    ckpt.hyper = model::ApplyJson(model::HyperParams{}, header);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("corrupted header: {}", e.what()), json_offset);
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("corrupted header: {}", e.what()), json_offset);
  }

  const std::size_t params_offset = r.offset();
  const auto count = r.Get<std::uint32_t>("tensor count");
  std::map<std::string, Tensor<float>> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto [name, t] = GetTensor(r);
    tensors.emplace(std::move(name), std::move(t));
  }
  for (auto& [name, dst] : ckpt.params.Named()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw FormatError("parameter section lacks tensor '" + name + "'", params_offset);
    }
    *dst = std::move(it->second);
  }

  const std::size_t adam_offset = r.offset();
  const auto has_adam = r.Get<std::uint8_t>("adam flag");
  if (has_adam > 1) throw FormatError("bad adam flag", adam_offset);
  if (has_adam == 1) {
    AdamState a;
    a.beta1 = ckpt.hyper.adam_beta1;
    a.beta2 = ckpt.hyper.adam_beta2;
    a.epsilon = ckpt.hyper.adam_epsilon;
    a.step = r.Get<std::uint64_t>("adam step");
    const auto n = r.Get<std::uint32_t>("adam tensor count");
    std::map<std::string, Tensor<float>> moments;
    for (std::uint32_t k = 0; k < n; ++k) {
      auto [name, t] = GetTensor(r);
      moments.emplace(std::move(name), std::move(t));
    }
    for (const auto& [name, p] : ckpt.params.Named()) {
      auto m = moments.find("m/" + name);
      auto v = moments.find("v/" + name);
      if (m == moments.end() || v == moments.end()) {
        throw FormatError("adam section lacks moments for '" + name + "'", adam_offset);
      }
      if (m->second.shape() != p->shape() || v->second.shape() != p->shape()) {
        throw FormatError("adam moments for '" + name + "' have the wrong shape", adam_offset);
      }
      a.names.push_back(name);
      a.m.push_back(std::move(m->second));
      a.v.push_back(std::move(v->second));
    }
    ckpt.adam = std::move(a);
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("{} trailing bytes", r.remaining()), r.offset());
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  data::WriteBytes(path, EncodeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          std::optional<std::uint64_t> expected_vocab_hash,
                          std::vector<std::string>* warnings) {
  Checkpoint ckpt = DecodeCheckpoint(data::ReadBytes(path));
  if (expected_vocab_hash && *expected_vocab_hash != ckpt.vocab_hash && warnings != nullptr) {
    warnings->push_back(fmt::format(
        "checkpoint {} was trained with vocabulary hash {:016x}, current vocabulary is {:016x}",
        path.string(), ckpt.vocab_hash, *expected_vocab_hash));
  }
  return ckpt;
}

}  // namespace stt::train
