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

#include "stt/samples.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

namespace stt::data {

using nlohmann::json;

std::vector<CaptionRecord> ParseCaptionLines(std::string_view text) {
  std::vector<CaptionRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(fmt::format("caption line is not JSON: {}", e.what()), line_no);
    }
    if (!j.is_object() || !j.contains("image_id") || !j.contains("caption") ||
        !j["image_id"].is_number_unsigned() || !j["caption"].is_string()) {
      throw FormatError("caption line needs {\"image_id\": u64, \"caption\": string}", line_no);
    }
    records.push_back({j["image_id"].get<std::uint64_t>(), j["caption"].get<std::string>()});
  }
  return records;
}

std::vector<CaptionRecord> ReadCaptionFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open caption file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCaptionLines(ss.str());
}

void WriteCaptionFile(std::span<const CaptionRecord> records,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write caption file " + path.string());
  for (const auto& r : records) {
    out << json{{"image_id", r.image_id}, {"caption", r.caption}}.dump() << '\n';
  }
}

std::vector<ImageCaptions> GroupByImage(std::span<const CaptionRecord> records) {
  std::vector<ImageCaptions> images;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.emplace(r.image_id, images.size());
    if (inserted) images.push_back({r.image_id, {}});
    images[it->second].captions.push_back(r.caption);
  }
  return images;
}

std::vector<std::pair<std::size_t, std::size_t>> ParaphrasePairIndices(std::size_t k) {
  if (k == 0) throw ContractError("make_paraphrase_pairs: empty caption list");
  if (k == 1) return {{0, 0}};
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(k * (k - 1));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

std::vector<Sample> BuildSamples(std::span<const ImageCaptions> images,
                                 const Vocabulary& vocab, std::vector<std::string>* warnings) {
  std::vector<Sample> samples;
  for (const auto& image : images) {
    std::vector<std::vector<TokenId>> tokenized;
    for (const auto& caption : image.captions) {
      auto ids = Tokenize(caption, vocab);
      if (ids.size() <= 2) {
        if (warnings != nullptr) {
          warnings->push_back(fmt::format("image {}: dropped caption with no words: \"{}\"",
                                          image.image_id, caption));
        }
        continue;
      }
      tokenized.push_back(std::move(ids));
    }
    if (tokenized.empty()) {
      if (warnings != nullptr) {
        warnings->push_back(fmt::format("image {}: no usable captions, image skipped",
                                        image.image_id));
      }
      continue;
    }
    for (const auto& [a, b] : ParaphrasePairIndices(tokenized.size())) {
      samples.push_back({image.image_id, tokenized[a], tokenized[b]});
    }
  }
  return samples;
}

std::size_t TokenBatch::length(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < steps; ++t) n += active(b, t) ? 1 : 0;
  return n;
}

std::vector<TokenId> TokenBatch::Row(std::size_t b) const {
  std::vector<TokenId> row;
  for (std::size_t t = 0; t < steps && active(b, t); ++t) row.push_back(at(b, t));
  return row;
}

TokenBatch PadSequences(std::span<const std::vector<TokenId>> sequences) {
  TokenBatch out;
  out.batch = sequences.size();
  for (const auto& s : sequences) out.steps = std::max(out.steps, s.size());
  out.ids.assign(out.batch * out.steps, Vocabulary::kPad);
  out.mask.assign(out.batch * out.steps, 0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    for (std::size_t t = 0; t < sequences[b].size(); ++t) {
      out.ids[b * out.steps + t] = sequences[b][t];
      out.mask[b * out.steps + t] = 1;
    }
  }
  return out;
}

std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates with raw engine output keeps the order identical across
  // standard library implementations.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Batch AssembleBatch(std::span<const Sample* const> samples, const FeatureStore& store) {
  if (samples.empty()) throw ContractError("make_batches: empty batch");
  const std::size_t per_image = static_cast<std::size_t>(store.regions()) * store.dim();
  Batch batch;
  std::vector<float> features;
  features.reserve(samples.size() * per_image);
  std::vector<std::vector<TokenId>> a, b;
  for (const Sample* s : samples) {
    const auto values = store.Get(s->image_id);
    features.insert(features.end(), values.begin(), values.end());
    a.push_back(s->caption_a);
    b.push_back(s->caption_b);
    batch.image_ids.push_back(s->image_id);
  }
  batch.features = Tensor<float>({samples.size(), store.regions(), store.dim()},
                                 std::move(features));
  batch.caption_a = PadSequences(a);
  batch.caption_b = PadSequences(b);
  return batch;
}

std::vector<Batch> MakeBatches(std::span<const Sample> samples, const FeatureStore& store,
                               std::size_t batch_size, std::uint64_t seed,
                               std::uint64_t epoch) {
  if (samples.empty()) throw ContractError("make_batches: no samples");
  if (batch_size == 0) throw ContractError("make_batches: batch_size must be >= 1");
  for (const auto& s : samples) {
    if (!store.Contains(s.image_id)) {
      throw ContractError(fmt::format("make_batches: missing feature record for image {}",
                                      s.image_id));
    }
  }
  const auto order = EpochOrder(samples.size(), seed, epoch);
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    std::vector<const Sample*> chunk;
    for (std::size_t k = begin; k < end; ++k) chunk.push_back(&samples[order[k]]);
    batches.push_back(AssembleBatch(chunk, store));
  }
  return batches;
}

}  // namespace stt::data
