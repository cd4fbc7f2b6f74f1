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

#include "stt/feature_store.h"

#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "stt/byte_io.h"
#include "stt/error.h"

namespace stt::data {

FeatureStore::FeatureStore(std::uint32_t regions, std::uint32_t dim)
    : regions_(regions), dim_(dim) {
  if (regions == 0 || dim == 0) {
    throw DimensionError(fmt::format("feature store needs positive regions/dim, got {}x{}",
                                     regions, dim));
  }
}

void FeatureStore::Add(std::uint64_t image_id, std::vector<float> values) {
  const std::size_t expected = static_cast<std::size_t>(regions_) * dim_;
  if (values.size() != expected) {
    throw DimensionError(fmt::format("image {}: {} feature values, store expects {}x{}",
                                     image_id, values.size(), regions_, dim_));
  }
  if (index_.contains(image_id)) {
    throw ContractError(fmt::format("image {} already present in feature store", image_id));
  }
  index_.emplace(image_id, ids_.size());
  ids_.push_back(image_id);
  values_.push_back(std::move(values));
}

std::span<const float> FeatureStore::Get(std::uint64_t image_id) const {
  const auto it = index_.find(image_id);
  if (it == index_.end()) {
    throw ContractError(fmt::format("no feature record for image {}", image_id));
  }
  return values_[it->second];
}

Tensor<float> FeatureStore::GetTensor(std::uint64_t image_id) const {
  const auto v = Get(image_id);
  return Tensor<float>({regions_, dim_}, std::vector<float>(v.begin(), v.end()));
}

bool FeatureStore::operator==(const FeatureStore& other) const {
  return regions_ == other.regions_ && dim_ == other.dim_ && ids_ == other.ids_ &&
         values_ == other.values_;
}

std::vector<std::uint8_t> EncodeFeatureStore(const FeatureStore& store) {
  io::ByteWriter w;
  w.PutString("STTF");
  w.Put<std::uint32_t>(kFeatureFileVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
  w.Put<std::uint32_t>(store.regions());
  w.Put<std::uint32_t>(store.dim());
  for (std::uint64_t id : store.ids()) {
    w.Put<std::uint64_t>(id);
    for (float x : store.Get(id)) w.Put<float>(x);
  }
  return std::move(w.bytes());
}

FeatureStore DecodeFeatureStore(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.GetString(4, "magic") != "STTF") throw FormatError("bad magic, expected STTF", 0);
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kFeatureFileVersion) {
    throw FormatError(fmt::format("unsupported STTF version {}", version), 4);
  }
  const auto count = r.Get<std::uint32_t>("record count");
  const auto regions = r.Get<std::uint32_t>("regions");
  const auto dim = r.Get<std::uint32_t>("dim");
  if (regions == 0 || dim == 0) {
    throw FormatError(fmt::format("inconsistent dims regions={} dim={}", regions, dim), 12);
  }
  const std::size_t per_record = static_cast<std::size_t>(regions) * dim;
  FeatureStore store(regions, dim);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::size_t record_offset = r.offset();
    if (r.remaining() < sizeof(std::uint64_t) + per_record * sizeof(float)) {
      throw FormatError(fmt::format("truncated payload: header claims {} records, "
                                    "record {} is incomplete",
                                    count, k),
                        record_offset);
    }
    const auto id = r.Get<std::uint64_t>("image id");
    std::vector<float> values(per_record);
    for (float& x : values) x = r.Get<float>("feature value");
    if (store.Contains(id)) {
      throw FormatError(fmt::format("duplicate image id {}", id), record_offset);
    }
    store.Add(id, std::move(values));
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("{} trailing bytes after {} records", r.remaining(), count),
                      r.offset());
  }
  return store;
}

std::vector<std::uint8_t> ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void WriteBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

FeatureStore ReadFeatureFile(const std::filesystem::path& path) {
  return DecodeFeatureStore(ReadBytes(path));
}

void WriteFeatureFile(const FeatureStore& store, const std::filesystem::path& path) {
  WriteBytes(path, EncodeFeatureStore(store));
}

}  // namespace stt::data
