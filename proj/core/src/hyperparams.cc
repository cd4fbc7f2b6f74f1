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

#include "stt/hyperparams.h"

#include <cmath>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::model {

using nlohmann::json;

std::string_view ToString(NegativeMode m) {
  return m == NegativeMode::kSum ? "sum" : "hardest";
}

std::string_view ToString(SimilarityMode m) {
  return m == SimilarityMode::kGlobal ? "global" : "attention";
}

std::string_view ToString(Aggregation a) {
  return a == Aggregation::kMean ? "mean" : "logsumexp";
}

NegativeMode ParseNegativeMode(std::string_view s) {
  if (s == "sum") return NegativeMode::kSum;
  if (s == "hardest") return NegativeMode::kHardest;
  throw ConfigError("negatives", fmt::format("expected sum|hardest, got '{}'", s));
}

SimilarityMode ParseSimilarityMode(std::string_view s) {
  if (s == "global") return SimilarityMode::kGlobal;
  if (s == "attention") return SimilarityMode::kAttention;
  throw ConfigError("mode", fmt::format("expected global|attention, got '{}'", s));
}

Aggregation ParseAggregation(std::string_view s) {
  if (s == "mean") return Aggregation::kMean;
  if (s == "logsumexp") return Aggregation::kLogSumExp;
  throw ConfigError("aggregation", fmt::format("expected mean|logsumexp, got '{}'", s));
}

HyperParams HyperParams::Paper() { return HyperParams{}; }

HyperParams HyperParams::Toy() {
  HyperParams hp;
  hp.cvs_dim = 32;
  hp.word_dim = 16;
  hp.hidden_dim = 32;
  hp.learning_rate = 0.01;
  hp.batch_size = 32;
  hp.epochs = 100;
  hp.min_freq = 1;
  return hp;
}

HyperParams HyperParams::Profile(std::string_view name) {
  if (name == "paper") return Paper();
  if (name == "toy") return Toy();
  throw ConfigError("profile", fmt::format("expected paper|toy, got '{}'", name));
}

void HyperParams::Validate() const {
  auto positive = [](const char* field, double v) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(field, fmt::format("must be > 0, got {}", v));
  };
  auto nonneg = [](const char* field, double v) {
    if (!(v >= 0) || !std::isfinite(v)) throw ConfigError(field, fmt::format("must be >= 0, got {}", v));
  };
  positive("cvs_dim", static_cast<double>(cvs_dim));
  positive("word_dim", static_cast<double>(word_dim));
  positive("hidden_dim", static_cast<double>(hidden_dim));
  positive("margin", margin);
  nonneg("lambda_rank", lambda_rank);
  nonneg("lambda_ic", lambda_ic);
  nonneg("lambda_sp", lambda_sp);
  positive("learning_rate", learning_rate);
  positive("batch_size", static_cast<double>(batch_size));
  nonneg("grad_clip", grad_clip);
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("adam_beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("adam_beta2", "must be in [0, 1)");
  positive("adam_epsilon", adam_epsilon);
  positive("init_scale", init_scale);
  positive("regions", static_cast<double>(regions));
  positive("attention_temperature", attention_temperature);
  positive("aggregation_temperature", aggregation_temperature);
  positive("max_decode_len", static_cast<double>(max_decode_len));
  positive("min_freq", static_cast<double>(min_freq));
}

json ToJson(const HyperParams& hp) {
  return json{
      {"cvs_dim", hp.cvs_dim},
      {"word_dim", hp.word_dim},
      {"hidden_dim", hp.hidden_dim},
      {"margin", hp.margin},
      {"lambda_rank", hp.lambda_rank},
      {"lambda_ic", hp.lambda_ic},
      {"lambda_sp", hp.lambda_sp},
      {"negatives", ToString(hp.negatives)},
      {"learning_rate", hp.learning_rate},
      {"batch_size", hp.batch_size},
      {"epochs", hp.epochs},
      {"grad_clip", hp.grad_clip},
      {"adam_beta1", hp.adam_beta1},
      {"adam_beta2", hp.adam_beta2},
      {"adam_epsilon", hp.adam_epsilon},
      {"init_scale", hp.init_scale},
      {"mode", ToString(hp.mode)},
      {"regions", hp.regions},
      {"attention_temperature", hp.attention_temperature},
      {"aggregation", ToString(hp.aggregation)},
      {"aggregation_temperature", hp.aggregation_temperature},
      {"max_decode_len", hp.max_decode_len},
      {"min_freq", hp.min_freq},
      {"seed", hp.seed},
  };
}

namespace {

template <typename T>
T Read(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
    } else {
      if (!v.is_number_unsigned()) throw ConfigError(key, "expected a non-negative integer");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

HyperParams ApplyJson(HyperParams hp, const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "cvs_dim") hp.cvs_dim = Read<std::size_t>(v, key);
    else if (key == "word_dim") hp.word_dim = Read<std::size_t>(v, key);
    else if (key == "hidden_dim") hp.hidden_dim = Read<std::size_t>(v, key);
    else if (key == "margin") hp.margin = Read<double>(v, key);
    else if (key == "lambda_rank") hp.lambda_rank = Read<double>(v, key);
    else if (key == "lambda_ic") hp.lambda_ic = Read<double>(v, key);
    else if (key == "lambda_sp") hp.lambda_sp = Read<double>(v, key);
    else if (key == "negatives") hp.negatives = ParseNegativeMode(Read<std::string>(v, key));
    else if (key == "learning_rate") hp.learning_rate = Read<double>(v, key);
    else if (key == "batch_size") hp.batch_size = Read<std::size_t>(v, key);
    else if (key == "epochs") hp.epochs = Read<std::size_t>(v, key);
    else if (key == "grad_clip") hp.grad_clip = Read<double>(v, key);
    else if (key == "adam_beta1") hp.adam_beta1 = Read<double>(v, key);
    else if (key == "adam_beta2") hp.adam_beta2 = Read<double>(v, key);
    else if (key == "adam_epsilon") hp.adam_epsilon = Read<double>(v, key);
    else if (key == "init_scale") hp.init_scale = Read<double>(v, key);
    else if (key == "mode") hp.mode = ParseSimilarityMode(Read<std::string>(v, key));
    else if (key == "regions") hp.regions = Read<std::size_t>(v, key);
    else if (key == "attention_temperature") hp.attention_temperature = Read<double>(v, key);
    else if (key == "aggregation") hp.aggregation = ParseAggregation(Read<std::string>(v, key));
    else if (key == "aggregation_temperature") hp.aggregation_temperature = Read<double>(v, key);
    else if (key == "max_decode_len") hp.max_decode_len = Read<std::size_t>(v, key);
    else if (key == "min_freq") hp.min_freq = Read<std::size_t>(v, key);
    else if (key == "seed") hp.seed = Read<std::uint64_t>(v, key);
    else throw ConfigError(key, "unknown key");
  }
  return hp;
}

}  // namespace stt::model
