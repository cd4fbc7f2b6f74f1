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

#ifndef STT_CHECKPOINT_H_
#define STT_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stt/adam.h"
#include "stt/hyperparams.h"
#include "stt/model.h"

namespace stt::train {

// Checkpoint file (little-endian):
//   "STTC" | u32 version=1 | u32 json_len | json (hyperparameters plus a
//   "checkpoint" object: epoch, vocab_hash) | u32 tensor_count |
//   tensor_count x (u16 name_len | name | u8 rank | rank x u32 dim | f32 data)
//   | u8 has_adam [| u64 step | u32 count | tensors "m/<name>", "v/<name>"]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::HyperParams hyper;
  model::ModelParams<float> params;
  std::optional<AdamState> adam;
  std::uint64_t vocab_hash = 0;
  // Number of completed epochs.
  std::uint64_t epoch = 0;
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& ckpt);
// Throws FormatError with the byte offset of a corrupted or truncated
// section, or of an unsupported version.
Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes);

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// When `expected_vocab_hash` is given and differs from the stored hash a
// message is appended to `warnings`; loading still succeeds.
Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          std::optional<std::uint64_t> expected_vocab_hash = std::nullopt,
                          std::vector<std::string>* warnings = nullptr);

}  // namespace stt::train

#endif  // STT_CHECKPOINT_H_
