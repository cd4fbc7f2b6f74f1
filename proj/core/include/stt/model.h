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

#ifndef STT_MODEL_H_
#define STT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stt/graph.h"
#include "stt/hyperparams.h"
#include "stt/samples.h"
#include "stt/tensor.h"
#include "stt/vocabulary.h"

namespace stt::model {

using data::TokenBatch;
using data::TokenId;

// Every trainable weight. Matrices are stored input-major ([in x out]) so a
// row batch x is projected as x * W + b.
//
// One decoder (decoder_w/b, output_w/b, init_*) serves both the image and
// the sentence decoding path.
template <typename Real>
struct ModelParams {
  Tensor<Real> image_w;         // [feature_dim x D]
  Tensor<Real> image_b;         // [D]
  Tensor<Real> word_embedding;  // [V x D_w]
  Tensor<Real> encoder_w;       // [(D_w + H) x 4H], gates i f g o
  Tensor<Real> encoder_b;       // [4H]
  Tensor<Real> sentence_w;      // [H x D]
  Tensor<Real> sentence_b;      // [D]
  Tensor<Real> decoder_w;       // [(D_w + H) x 4H]
  Tensor<Real> decoder_b;       // [4H]
  Tensor<Real> output_w;        // [H x V]
  Tensor<Real> output_b;        // [V]
  Tensor<Real> init_h_w;        // [D x H]
  Tensor<Real> init_h_b;        // [H]
  Tensor<Real> init_c_w;        // [D x H]
  Tensor<Real> init_c_b;        // [H]

  // Weights uniform in [-init_scale, init_scale] from a seeded engine;
  // biases zero except the LSTM forget gates (+1).
  static ModelParams Initialize(const HyperParams& hp, std::size_t feature_dim,
                                std::size_t vocab_size, std::uint64_t seed);

  // Stable (name, tensor) listing used by the optimizer and checkpoints.
  std::vector<std::pair<std::string, Tensor<Real>*>> Named();
  std::vector<std::pair<std::string, const Tensor<Real>*>> Named() const;

  std::size_t feature_dim() const { return image_w.dim(0); }
  std::size_t cvs_dim() const { return image_w.dim(1); }
  std::size_t vocab_size() const { return word_embedding.dim(0); }
  std::size_t word_dim() const { return word_embedding.dim(1); }
  std::size_t hidden_dim() const { return sentence_w.dim(0); }

  void ZeroGrad();

  template <typename To>
  ModelParams<To> CastTo() const;
};

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

// Graph leaves for every parameter of one forward pass.
struct ParamNodes {
  NodeId image_w, image_b, word_embedding, encoder_w, encoder_b, sentence_w, sentence_b,
      decoder_w, decoder_b, output_w, output_b, init_h_w, init_h_b, init_c_w, init_c_b;
};

// Binds parameters as Variables (gradients flow back into the tensors).
template <typename Real>
ParamNodes BindParams(Graph<Real>& g, ModelParams<Real>& params);
// Binds parameters as Constants for inference.
template <typename Real>
ParamNodes BindConstants(Graph<Real>& g, const ModelParams<Real>& params);

struct AttentionOptions {
  double temperature = 9.0;
  Aggregation aggregation = Aggregation::kMean;
  double aggregation_temperature = 6.0;

  static AttentionOptions From(const HyperParams& hp) {
    return {hp.attention_temperature, hp.aggregation, hp.aggregation_temperature};
  }
};

struct LstmState {
  NodeId h;
  NodeId c;
};

// ---- Graph-level batch operations (used by training) ----

// Mean over the region axis of [B x R x dim] features -> [B x dim].
template <typename Real>
Tensor<Real> MeanPoolRegions(const Tensor<float>& features);

// Global image embeddings [B x D], unit rows. Regions are mean-pooled first
// when R > 1.
template <typename Real>
NodeId EncodeImages(Graph<Real>& g, const ParamNodes& p, const Tensor<float>& features);

struct RegionNodes {
  std::vector<NodeId> regions;  // per image [N x D], unit rows
  NodeId means;                 // [B x D] mean of each image's region embeddings
};

template <typename Real>
RegionNodes EncodeImageRegions(Graph<Real>& g, const ParamNodes& p,
                               const Tensor<float>& features);

struct SentenceNodes {
  NodeId embeddings;            // [B x D], unit rows
  std::vector<NodeId> words;    // per item [n_words x D], unit rows (optional)
};

// LSTM over the full <start>...<end> sequence; padded steps carry the
// previous state forward so the embedding is taken at each item's last
// real token. Throws ContractError for an item with no words.
template <typename Real>
SentenceNodes EncodeSentences(Graph<Real>& g, const ParamNodes& p, const TokenBatch& tokens,
                              bool with_words);

template <typename Real>
LstmState InitialDecoderState(Graph<Real>& g, const ParamNodes& p, NodeId condition);

// One decoder step; returns the new state and the [B x V] log-probabilities.
template <typename Real>
std::pair<LstmState, NodeId> DecoderStep(Graph<Real>& g, const ParamNodes& p,
                                         const LstmState& state,
                                         std::span<const TokenId> inputs);

// Teacher forcing: step t consumes target[:, t] and scores target[:, t+1].
// Returns steps-1 log-probability nodes of shape [B x V].
template <typename Real>
std::vector<NodeId> DecodeTeacherForced(Graph<Real>& g, const ParamNodes& p, NodeId condition,
                                        const TokenBatch& target);

struct AttentionNodes {
  NodeId score;    // [1]
  NodeId weights;  // [T x N], rows sum to 1
};

// s(i, c): per word, cosines to all regions are clamped at zero, divided by
// the row maximum (rows that are all zero stay zero), sharpened by the
// temperature and softmaxed into region weights; the attended region vector
// is compared to the word by cosine and the per-word relevances are pooled.
template <typename Real>
AttentionNodes AttentionSimilarity(Graph<Real>& g, NodeId regions, NodeId words,
                                   const AttentionOptions& options);

// [images x captions] matrix of attention similarities.
template <typename Real>
NodeId AttentionScoreMatrix(Graph<Real>& g, std::span<const NodeId> regions,
                            std::span<const NodeId> words, const AttentionOptions& options);

// ---- Single-example inference API ----

template <typename Real>
std::vector<Real> EncodeImage(const Tensor<float>& features, const ModelParams<Real>& params);

template <typename Real>
struct RegionEncoding {
  Tensor<Real> regions;     // [N x D]
  std::vector<Real> mean;   // [D]
};

template <typename Real>
RegionEncoding<Real> EncodeImageRegions(const Tensor<float>& features,
                                        const ModelParams<Real>& params);

template <typename Real>
struct SentenceEncoding {
  std::vector<Real> embedding;  // [D]
  Tensor<Real> words;           // [n_words x D]
};

template <typename Real>
SentenceEncoding<Real> EncodeSentence(std::span<const TokenId> tokens,
                                      const ModelParams<Real>& params);

// [len(target)-1 x V] log-probabilities.
template <typename Real>
Tensor<Real> DecodeTeacherForced(std::span<const Real> condition,
                                 std::span<const TokenId> target,
                                 const ModelParams<Real>& params);

// Feeds back the argmax token, stops at <end> or after max_len tokens.
// The returned sequence excludes <start>/<end>.
template <typename Real>
std::vector<TokenId> DecodeGreedy(std::span<const Real> condition,
                                  const ModelParams<Real>& params, std::size_t max_len);

// Batched greedy decoding of [B x D] conditions.
template <typename Real>
std::vector<std::vector<TokenId>> DecodeGreedyBatch(const Tensor<Real>& conditions,
                                                    const ModelParams<Real>& params,
                                                    std::size_t max_len);

template <typename Real>
Real AttentionSimilarity(const Tensor<Real>& regions, const Tensor<Real>& words,
                         const AttentionOptions& options = {});

}  // namespace stt::model

#endif  // STT_MODEL_H_
