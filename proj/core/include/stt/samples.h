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

#ifndef STT_SAMPLES_H_
#define STT_SAMPLES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stt/error.h"
#include "stt/feature_store.h"
#include "stt/tensor.h"
#include "stt/vocabulary.h"

namespace stt::data {

// One line of a caption file: {"image_id": <u64>, "caption": <string>}.
struct CaptionRecord {
  std::uint64_t image_id = 0;
  std::string caption;
};

// Throws FormatError (offset = 1-based line number) on malformed JSON or
// missing fields. Blank lines are skipped.
std::vector<CaptionRecord> ParseCaptionLines(std::string_view text);
std::vector<CaptionRecord> ReadCaptionFile(const std::filesystem::path& path);
void WriteCaptionFile(std::span<const CaptionRecord> records,
                      const std::filesystem::path& path);

struct ImageCaptions {
  std::uint64_t image_id = 0;
  std::vector<std::string> captions;
};

// Groups captions by image, images in order of first appearance.
std::vector<ImageCaptions> GroupByImage(std::span<const CaptionRecord> records);

// All ordered index pairs (a, b) with a != b; k = 1 yields the single
// self-pair (0, 0). Throws ContractError when k == 0.
std::vector<std::pair<std::size_t, std::size_t>> ParaphrasePairIndices(std::size_t k);

template <typename T>
std::vector<std::pair<T, T>> MakeParaphrasePairs(std::span<const T> items) {
  std::vector<std::pair<T, T>> pairs;
  for (const auto& [a, b] : ParaphrasePairIndices(items.size())) {
    pairs.emplace_back(items[a], items[b]);
  }
  return pairs;
}

// One training example: an image and two paraphrase captions (token ids
// including <start>/<end>).
struct Sample {
  std::uint64_t image_id = 0;
  std::vector<TokenId> caption_a;
  std::vector<TokenId> caption_b;
};

// Tokenizes every caption, drops captions with no words (appending a
// message to `warnings`) and expands each image into its paraphrase pairs.
std::vector<Sample> BuildSamples(std::span<const ImageCaptions> images,
                                 const Vocabulary& vocab,
                                 std::vector<std::string>* warnings = nullptr);

// Right-padded token matrix [batch x steps] with a 0/1 mask.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;

  TokenId at(std::size_t b, std::size_t t) const { return ids[b * steps + t]; }
  bool active(std::size_t b, std::size_t t) const { return mask[b * steps + t] != 0; }
  std::size_t length(std::size_t b) const;
  std::vector<TokenId> Row(std::size_t b) const;
};

TokenBatch PadSequences(std::span<const std::vector<TokenId>> sequences);

struct Batch {
  // [B x regions x dim]
  Tensor<float> features;
  TokenBatch caption_a;
  TokenBatch caption_b;
  std::vector<std::uint64_t> image_ids;

  std::size_t size() const { return image_ids.size(); }
};

// Deterministic permutation of [0, n) for (seed, epoch).
std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

// Shuffles samples with EpochOrder(seed, epoch) and slices them into
// batches; the final short batch is kept. Throws ContractError naming the
// image id when a feature record is missing.
std::vector<Batch> MakeBatches(std::span<const Sample> samples, const FeatureStore& store,
                               std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch = 0);

// Assembles a batch from explicit samples in the given order.
Batch AssembleBatch(std::span<const Sample* const> samples, const FeatureStore& store);

}  // namespace stt::data

#endif  // STT_SAMPLES_H_
