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

#ifndef STT_FEATURE_STORE_H_
#define STT_FEATURE_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stt/tensor.h"

namespace stt::data {

// Precomputed image features keyed by image id. Every record holds
// regions() x dim() floats; regions() is 1 for global CNN features and N
// (36 by default) for detector region features.
//
// Records keep insertion order so that a read followed by a write
// reproduces the source file byte for byte.
class FeatureStore {
 public:
  FeatureStore() = default;
  FeatureStore(std::uint32_t regions, std::uint32_t dim);

  // Throws DimensionError on a wrong value count and ContractError on a
  // duplicate id.
  void Add(std::uint64_t image_id, std::vector<float> values);

  bool Contains(std::uint64_t image_id) const { return index_.contains(image_id); }
  // Throws ContractError naming the id when it is missing.
  std::span<const float> Get(std::uint64_t image_id) const;
  // Record as a [regions x dim] tensor.
  Tensor<float> GetTensor(std::uint64_t image_id) const;

  std::uint32_t regions() const { return regions_; }
  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  // Ids in insertion (file) order.
  const std::vector<std::uint64_t>& ids() const { return ids_; }

  bool operator==(const FeatureStore& other) const;

 private:
  std::uint32_t regions_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<std::vector<float>> values_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

// STTF binary layout (little-endian):
//   "STTF" | u32 version=1 | u32 record_count | u32 regions | u32 dim |
//   record_count x (u64 image_id | regions*dim f32)
inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> EncodeFeatureStore(const FeatureStore& store);
// Throws FormatError carrying the byte offset of the defect.
FeatureStore DecodeFeatureStore(std::span<const std::uint8_t> bytes);

FeatureStore ReadFeatureFile(const std::filesystem::path& path);
void WriteFeatureFile(const FeatureStore& store, const std::filesystem::path& path);

// Whole-file helpers shared by the binary formats.
std::vector<std::uint8_t> ReadBytes(const std::filesystem::path& path);
void WriteBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace stt::data

#endif  // STT_FEATURE_STORE_H_
