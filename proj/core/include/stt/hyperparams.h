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

#ifndef STT_HYPERPARAMS_H_
#define STT_HYPERPARAMS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace stt::model {

// How the ranking loss treats in-batch negatives.
enum class NegativeMode { kSum, kHardest };
// Global: one pooled vector per image, cosine similarity. Attention:
// region/word attention similarity.
enum class SimilarityMode { kGlobal, kAttention };
// How per-word relevances are pooled into s(i, c) in attention mode.
enum class Aggregation { kMean, kLogSumExp };

std::string_view ToString(NegativeMode m);
std::string_view ToString(SimilarityMode m);
std::string_view ToString(Aggregation a);
NegativeMode ParseNegativeMode(std::string_view s);
SimilarityMode ParseSimilarityMode(std::string_view s);
Aggregation ParseAggregation(std::string_view s);

struct HyperParams {
  std::size_t cvs_dim = 1024;
  std::size_t word_dim = 300;
  std::size_t hidden_dim = 1024;

  double margin = 0.2;
  double lambda_rank = 1.0;
  double lambda_ic = 1.0;
  double lambda_sp = 1.0;
  NegativeMode negatives = NegativeMode::kSum;

  double learning_rate = 2e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 15;
  // Global-norm clipping threshold; 0 disables clipping.
  double grad_clip = 2.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double init_scale = 0.08;

  SimilarityMode mode = SimilarityMode::kGlobal;
  std::size_t regions = 36;
  double attention_temperature = 9.0;
  Aggregation aggregation = Aggregation::kMean;
  double aggregation_temperature = 6.0;

  std::size_t max_decode_len = 30;
  std::size_t min_freq = 4;
  std::uint64_t seed = 0;

  // Published training setup: lr 2e-4, margin 0.2, batch 128, 15 epochs,
  // N = 36 regions.
  static HyperParams Paper();
  // Desk-scale profile used by the tests.
  static HyperParams Toy();
  static HyperParams Profile(std::string_view name);

  // Throws ConfigError naming the first invalid field.
  void Validate() const;

  bool operator==(const HyperParams&) const = default;
};

nlohmann::json ToJson(const HyperParams& hp);
// Overlays the keys of `j` onto `base`. Unknown keys and ill-typed values
// raise ConfigError.
HyperParams ApplyJson(HyperParams base, const nlohmann::json& j);

}  // namespace stt::model

#endif  // STT_HYPERPARAMS_H_
