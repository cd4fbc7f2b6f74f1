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

#ifndef STT_TASKS_H_
#define STT_TASKS_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stt/feature_store.h"
#include "stt/hyperparams.h"
#include "stt/model.h"
#include "stt/retrieval.h"
#include "stt/samples.h"
#include "stt/text_metrics.h"
#include "stt/vocabulary.h"

namespace stt::eval {

using EvalParams = model::ModelParams<double>;

// Batched inference helpers. Images missing from the store raise
// ContractError naming the id.
Tensor<double> EmbedImages(const EvalParams& params, const data::FeatureStore& store,
                           std::span<const std::uint64_t> ids);
std::vector<Tensor<double>> EmbedImageRegions(const EvalParams& params,
                                              const data::FeatureStore& store,
                                              std::span<const std::uint64_t> ids);
// Decoder condition per image: the global embedding, or the mean region
// embedding in attention mode.
Tensor<double> ImageConditions(const EvalParams& params, model::SimilarityMode mode,
                               const data::FeatureStore& store,
                               std::span<const std::uint64_t> ids);
Tensor<double> EmbedCaptions(const EvalParams& params,
                             std::span<const std::vector<data::TokenId>> captions);
std::vector<Tensor<double>> EmbedCaptionWords(const EvalParams& params,
                                              std::span<const std::vector<data::TokenId>> captions);
std::vector<std::vector<data::TokenId>> DecodeGreedyAll(const EvalParams& params,
                                                        const Tensor<double>& conditions,
                                                        std::size_t max_len);

// Images and their caption columns for retrieval.
struct RetrievalSet {
  std::vector<std::uint64_t> image_ids;
  std::vector<std::string> caption_text;
  std::vector<std::vector<data::TokenId>> captions;
  std::vector<std::size_t> column_owner;
};

// Captions without words and images left with no caption are dropped with a
// warning.
RetrievalSet MakeRetrievalSet(std::span<const data::ImageCaptions> images,
                              const data::Vocabulary& vocab,
                              std::vector<std::string>* warnings = nullptr);

SimilarityMatrix ScoreRetrievalSet(const EvalParams& params, const model::HyperParams& hp,
                                   const data::FeatureStore& store, const RetrievalSet& set);

// Contiguous image folds, each with only its own captions. Throws
// ContractError when the image count does not split evenly.
std::vector<RetrievalSet> SplitFolds(const RetrievalSet& set, std::size_t folds);

// Scores every fold separately (so only one fold's matrix is held at a time)
// and averages the metrics.
FoldedRetrieval EvaluateRetrievalFolds(const EvalParams& params, const model::HyperParams& hp,
                                       const data::FeatureStore& store, const RetrievalSet& set,
                                       std::size_t folds);

struct CaptionScores {
  std::array<double, 4> bleu{};  // B@1..B@4
  double meteor = 0.0;           // mean per-sentence score
  std::size_t count = 0;
};

// Empty candidates score zero METEOR and add nothing to the BLEU counts.
CaptionScores ScoreCaptions(std::span<const Sentence> candidates,
                            std::span<const ReferenceSet> references);

struct GeneratedSample {
  std::uint64_t image_id = 0;
  std::string query;  // the input caption for paraphrasing, empty otherwise
  std::string hypothesis;
  std::vector<std::string> references;
};

struct TextEval {
  CaptionScores scores;
  std::vector<GeneratedSample> samples;
};

// Greedy captions for every image, scored against its captions.
TextEval EvalCaptionTask(const EvalParams& params, const model::HyperParams& hp,
                         const data::Vocabulary& vocab, const data::FeatureStore& store,
                         std::span<const data::ImageCaptions> images);

// Every caption is a query decoded from its own sentence embedding and
// scored against the other captions of the same image. Images with a single
// caption have nothing to compare against and are skipped.
TextEval EvalParaphraseTask(const EvalParams& params, const model::HyperParams& hp,
                            const data::Vocabulary& vocab,
                            std::span<const data::ImageCaptions> images);

// Fraction of caption_b steps after <start> (through <end>) where the
// argmax of the decoder, conditioned on the image, equals the target.
double TeacherForcedAccuracy(const EvalParams& params, const model::HyperParams& hp,
                             const data::FeatureStore& store,
                             std::span<const data::Sample> samples);

}  // namespace stt::eval

#endif  // STT_TASKS_H_
