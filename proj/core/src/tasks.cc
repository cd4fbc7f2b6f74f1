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

#include "stt/tasks.h"

#include <algorithm>

#include <fmt/format.h>

#include "stt/error.h"
#include "stt/parallel.h"

namespace stt::eval {

using data::TokenId;
using model::ParamNodes;

namespace {

constexpr std::size_t kChunk = 128;

std::size_t ChunkCount(std::size_t n) { return (n + kChunk - 1) / kChunk; }

void RequireFeatures(const data::FeatureStore& store, std::span<const std::uint64_t> ids) {
  for (std::uint64_t id : ids) {
    if (!store.Contains(id)) throw ContractError(fmt::format("no feature record for image {}", id));
  }
}

Tensor<float> GatherFeatures(const data::FeatureStore& store,
                             std::span<const std::uint64_t> ids) {
  Tensor<float> out({ids.size(), store.regions(), store.dim()});
  const std::size_t record = store.regions() * store.dim();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto values = store.Get(ids[i]);
    std::copy(values.begin(), values.end(), out.data().begin() + i * record);
  }
  return out;
}

void CopyRows(const Tensor<double>& from, Tensor<double>& to, std::size_t first_row) {
  std::copy(from.data().begin(), from.data().end(),
            to.data().begin() + first_row * to.cols());
}

template <typename Fn>
void ForEachChunk(std::size_t n, Fn fn) {
  ParallelFor(ChunkCount(n), [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    fn(begin, std::min(n, begin + kChunk));
  });
}

std::vector<std::string> Words(std::span<const TokenId> ids, const data::Vocabulary& vocab) {
  return data::Detokenize(ids, vocab);
}

}  // namespace

Tensor<double> EmbedImages(const EvalParams& params, const data::FeatureStore& store,
                           std::span<const std::uint64_t> ids) {
  RequireFeatures(store, ids);
  if (ids.empty()) throw ContractError("embed_images: no images");
  Tensor<double> out({ids.size(), params.cvs_dim()});
  ForEachChunk(ids.size(), [&](std::size_t begin, std::size_t end) {
    Graph<double> g;
    const ParamNodes p = model::BindConstants(g, params);
    const NodeId e = model::EncodeImages(g, p, GatherFeatures(store, ids.subspan(begin, end - begin)));
    CopyRows(g.value(e), out, begin);
  });
  return out;
}

std::vector<Tensor<double>> EmbedImageRegions(const EvalParams& params,
                                              const data::FeatureStore& store,
                                              std::span<const std::uint64_t> ids) {
  RequireFeatures(store, ids);
  std::vector<Tensor<double>> out(ids.size());
  ForEachChunk(ids.size(), [&](std::size_t begin, std::size_t end) {
    Graph<double> g;
    const ParamNodes p = model::BindConstants(g, params);
    const model::RegionNodes nodes =
        model::EncodeImageRegions(g, p, GatherFeatures(store, ids.subspan(begin, end - begin)));
    for (std::size_t i = begin; i < end; ++i) out[i] = g.value(nodes.regions[i - begin]);
  });
  return out;
}

Tensor<double> ImageConditions(const EvalParams& params, model::SimilarityMode mode,
                               const data::FeatureStore& store,
                               std::span<const std::uint64_t> ids) {
  if (mode == model::SimilarityMode::kGlobal) return EmbedImages(params, store, ids);
  RequireFeatures(store, ids);
  if (ids.empty()) throw ContractError("image_conditions: no images");
  Tensor<double> out({ids.size(), params.cvs_dim()});
  ForEachChunk(ids.size(), [&](std::size_t begin, std::size_t end) {
    Graph<double> g;
    const ParamNodes p = model::BindConstants(g, params);
    const model::RegionNodes nodes =
        model::EncodeImageRegions(g, p, GatherFeatures(store, ids.subspan(begin, end - begin)));
    CopyRows(g.value(nodes.means), out, begin);
  });
  return out;
}

Tensor<double> EmbedCaptions(const EvalParams& params,
                             std::span<const std::vector<TokenId>> captions) {
  if (captions.empty()) throw ContractError("embed_captions: no captions");
  Tensor<double> out({captions.size(), params.cvs_dim()});
  ForEachChunk(captions.size(), [&](std::size_t begin, std::size_t end) {
    Graph<double> g;
    const ParamNodes p = model::BindConstants(g, params);
    const auto nodes = model::EncodeSentences(
        g, p, data::PadSequences(captions.subspan(begin, end - begin)), false);
    CopyRows(g.value(nodes.embeddings), out, begin);
  });
  return out;
}

std::vector<Tensor<double>> EmbedCaptionWords(const EvalParams& params,
                                              std::span<const std::vector<TokenId>> captions) {
  std::vector<Tensor<double>> out(captions.size());
  ForEachChunk(captions.size(), [&](std::size_t begin, std::size_t end) {
    Graph<double> g;
    const ParamNodes p = model::BindConstants(g, params);
    const auto nodes = model::EncodeSentences(
        g, p, data::PadSequences(captions.subspan(begin, end - begin)), true);
    for (std::size_t i = begin; i < end; ++i) out[i] = g.value(nodes.words[i - begin]);
  });
  return out;
}

std::vector<std::vector<TokenId>> DecodeGreedyAll(const EvalParams& params,
                                                  const Tensor<double>& conditions,
                                                  std::size_t max_len) {
  if (max_len == 0) throw ContractError("decode: max_len must be >= 1");
  const std::size_t n = conditions.rows();
  const std::size_t d = conditions.cols();
  std::vector<std::vector<TokenId>> out(n);
  ForEachChunk(n, [&](std::size_t begin, std::size_t end) {
    Tensor<double> chunk({end - begin, d});
    std::copy(conditions.data().begin() + begin * d, conditions.data().begin() + end * d,
              chunk.data().begin());
    auto decoded = model::DecodeGreedyBatch(chunk, params, max_len);
    std::move(decoded.begin(), decoded.end(), out.begin() + begin);
  });
  return out;
}

RetrievalSet MakeRetrievalSet(std::span<const data::ImageCaptions> images,
                              const data::Vocabulary& vocab, std::vector<std::string>* warnings) {
  RetrievalSet set;
  for (const data::ImageCaptions& image : images) {
    const std::size_t row = set.image_ids.size();
    bool any = false;
    for (const std::string& caption : image.captions) {
      auto tokens = data::Tokenize(caption, vocab);
      if (tokens.size() < 3) {
        if (warnings) {
          warnings->push_back(fmt::format("image {}: caption without words skipped", image.image_id));
        }
        continue;
      }
      set.caption_text.push_back(caption);
      set.captions.push_back(std::move(tokens));
      set.column_owner.push_back(row);
      any = true;
    }
    if (any) {
      set.image_ids.push_back(image.image_id);
    } else if (warnings) {
      warnings->push_back(fmt::format("image {}: no usable caption, skipped", image.image_id));
    }
  }
  if (set.image_ids.empty()) throw ContractError("retrieval set is empty");
  return set;
}

SimilarityMatrix ScoreRetrievalSet(const EvalParams& params, const model::HyperParams& hp,
                                   const data::FeatureStore& store, const RetrievalSet& set) {
  if (hp.mode == model::SimilarityMode::kAttention) {
    const auto regions = EmbedImageRegions(params, store, set.image_ids);
    const auto words = EmbedCaptionWords(params, set.captions);
    return AttentionSimilarityMatrix(regions, words, set.column_owner,
                                     model::AttentionOptions::From(hp));
  }
  return GlobalSimilarityMatrix(EmbedImages(params, store, set.image_ids),
                                EmbedCaptions(params, set.captions), set.column_owner);
}

std::vector<RetrievalSet> SplitFolds(const RetrievalSet& set, std::size_t folds) {
  const std::size_t n = set.image_ids.size();
  if (folds == 0 || n == 0 || n % folds != 0) {
    throw ContractError(fmt::format("{} images cannot be split into {} equal folds", n, folds));
  }
  const std::size_t size = n / folds;
  std::vector<RetrievalSet> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].image_ids.assign(set.image_ids.begin() + f * size, set.image_ids.begin() + (f + 1) * size);
  }
  for (std::size_t c = 0; c < set.captions.size(); ++c) {
    const std::size_t owner = set.column_owner[c];
    RetrievalSet& fold = out[owner / size];
    fold.caption_text.push_back(set.caption_text[c]);
    fold.captions.push_back(set.captions[c]);
    fold.column_owner.push_back(owner % size);
  }
  return out;
}

FoldedRetrieval EvaluateRetrievalFolds(const EvalParams& params, const model::HyperParams& hp,
                                       const data::FeatureStore& store, const RetrievalSet& set,
                                       std::size_t folds) {
  FoldedRetrieval out;
  for (const RetrievalSet& fold : SplitFolds(set, folds)) {
    out.folds.push_back(EvaluateRetrieval(ScoreRetrievalSet(params, hp, store, fold)));
  }
  out.mean = MeanMetrics(out.folds);
  return out;
}

CaptionScores ScoreCaptions(std::span<const Sentence> candidates,
                            std::span<const ReferenceSet> references) {
  CaptionScores scores;
  const auto bleu = Bleu(candidates, references, 4);
  std::copy(bleu.begin(), bleu.end(), scores.bleu.begin());
  double meteor = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].empty()) meteor += MeteorExact(candidates[i], references[i]);
  }
  scores.meteor = meteor / static_cast<double>(candidates.size());
  scores.count = candidates.size();
  return scores;
}

namespace {

TextEval Score(std::vector<GeneratedSample> samples) {
  std::vector<Sentence> candidates;
  std::vector<ReferenceSet> references;
  for (const GeneratedSample& s : samples) {
    candidates.push_back(eval::Words(s.hypothesis));
    ReferenceSet refs;
    for (const std::string& r : s.references) refs.push_back(data::SplitWords(r));
    references.push_back(std::move(refs));
  }
  return {ScoreCaptions(candidates, references), std::move(samples)};
}

}  // namespace

TextEval EvalCaptionTask(const EvalParams& params, const model::HyperParams& hp,
                         const data::Vocabulary& vocab, const data::FeatureStore& store,
                         std::span<const data::ImageCaptions> images) {
  std::vector<std::uint64_t> ids;
  for (const data::ImageCaptions& image : images) {
    if (!image.captions.empty()) ids.push_back(image.image_id);
  }
  if (ids.empty()) throw ContractError("eval-caption: no images with captions");
  const auto conditions = ImageConditions(params, hp.mode, store, ids);
  const auto decoded = DecodeGreedyAll(params, conditions, hp.max_decode_len);

  std::vector<GeneratedSample> samples;
  std::size_t i = 0;
  for (const data::ImageCaptions& image : images) {
    if (image.captions.empty()) continue;
    samples.push_back({image.image_id, "", data::JoinWords(Words(decoded[i++], vocab)),
                       image.captions});
  }
  return Score(std::move(samples));
}

TextEval EvalParaphraseTask(const EvalParams& params, const model::HyperParams& hp,
                            const data::Vocabulary& vocab,
                            std::span<const data::ImageCaptions> images) {
  std::vector<GeneratedSample> samples;
  std::vector<std::vector<TokenId>> queries;
  for (const data::ImageCaptions& image : images) {
    if (image.captions.size() < 2) continue;
    for (std::size_t q = 0; q < image.captions.size(); ++q) {
      auto tokens = data::Tokenize(image.captions[q], vocab);
      if (tokens.size() < 3) continue;
      GeneratedSample s{image.image_id, image.captions[q], "", {}};
      for (std::size_t r = 0; r < image.captions.size(); ++r) {
        if (r != q && !data::SplitWords(image.captions[r]).empty()) {
          s.references.push_back(image.captions[r]);
        }
      }
      if (s.references.empty()) continue;
      samples.push_back(std::move(s));
      queries.push_back(std::move(tokens));
    }
  }
  if (samples.empty()) throw ContractError("eval-paraphrase: no image has two usable captions");
  const auto decoded = DecodeGreedyAll(params, EmbedCaptions(params, queries), hp.max_decode_len);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].hypothesis = data::JoinWords(Words(decoded[i], vocab));
  }
  return Score(std::move(samples));
}

double TeacherForcedAccuracy(const EvalParams& params, const model::HyperParams& hp,
                             const data::FeatureStore& store,
                             std::span<const data::Sample> samples) {
  if (samples.empty()) throw ContractError("teacher-forced accuracy: no samples");
  std::vector<std::uint64_t> ids;
  for (const data::Sample& s : samples) ids.push_back(s.image_id);
  const Tensor<double> conditions = ImageConditions(params, hp.mode, store, ids);

  std::vector<std::size_t> correct(samples.size(), 0);
  ParallelFor(samples.size(), [&](std::size_t i) {
    const auto cond = conditions.data().subspan(i * conditions.cols(), conditions.cols());
    const Tensor<double> lp = model::DecodeTeacherForced<double>(cond, samples[i].caption_b, params);
    for (std::size_t t = 0; t < lp.rows(); ++t) {
      const double* row = lp.data().data() + t * lp.cols();
      const auto best = static_cast<TokenId>(std::max_element(row, row + lp.cols()) - row);
      if (best == samples[i].caption_b[t + 1]) ++correct[i];
    }
  });
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    hits += correct[i];
    total += samples[i].caption_b.size() - 1;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace stt::eval
