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

#include "stt/model.h"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::model {
namespace {

template <typename Real>
Tensor<Real> UniformTensor(Shape shape, double scale, std::mt19937_64& rng) {
  Tensor<Real> t(std::move(shape));
  for (Real& x : t.data()) {
    // 53 random bits -> [0, 1); avoids implementation-defined distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = static_cast<Real>((2.0 * u - 1.0) * scale);
  }
  return t;
}

template <typename Real>
Tensor<Real> LstmBias(std::size_t hidden) {
  Tensor<Real> b({4 * hidden});
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = Real(1);
  return b;
}

template <typename Real>
LstmState LstmCell(Graph<Real>& g, NodeId w, NodeId b, NodeId x, const LstmState& s,
                   std::size_t hidden) {
  const NodeId parts[] = {x, s.h};
  const NodeId z = g.Add(g.MatMul(g.Concat(parts, 1), w), b);
  const NodeId in_gate = g.Sigmoid(g.Slice(z, 1, 0, hidden));
  const NodeId forget = g.Sigmoid(g.Slice(z, 1, hidden, hidden));
  const NodeId cand = g.Tanh(g.Slice(z, 1, 2 * hidden, hidden));
  const NodeId out_gate = g.Sigmoid(g.Slice(z, 1, 3 * hidden, hidden));
  const NodeId c = g.Add(g.Mul(forget, s.c), g.Mul(in_gate, cand));
  const NodeId h = g.Mul(out_gate, g.Tanh(c));
  return {h, c};
}

template <typename Real>
NodeId Project(Graph<Real>& g, NodeId x, NodeId w, NodeId b) {
  return g.Add(g.MatMul(x, w), b);
}

std::vector<TokenId> Column(const TokenBatch& tokens, std::size_t t) {
  std::vector<TokenId> col(tokens.batch);
  for (std::size_t b = 0; b < tokens.batch; ++b) col[b] = tokens.at(b, t);
  return col;
}

template <typename Real>
Tensor<Real> ToTensor(std::span<const Real> v, Shape shape) {
  return Tensor<Real>(std::move(shape), std::vector<Real>(v.begin(), v.end()));
}

}  // namespace

template <typename Real>
ModelParams<Real> ModelParams<Real>::Initialize(const HyperParams& hp, std::size_t feature_dim,
                                                std::size_t vocab_size, std::uint64_t seed) {
  if (feature_dim == 0 || vocab_size == 0) {
    throw ContractError(fmt::format("model init: feature_dim={} vocab_size={}", feature_dim,
                                    vocab_size));
  }
  const std::size_t d = hp.cvs_dim, dw = hp.word_dim, h = hp.hidden_dim;
  const double s = hp.init_scale;
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.image_w = UniformTensor<Real>({feature_dim, d}, s, rng);
  p.image_b = Tensor<Real>({d});
  p.word_embedding = UniformTensor<Real>({vocab_size, dw}, s, rng);
  p.encoder_w = UniformTensor<Real>({dw + h, 4 * h}, s, rng);
  p.encoder_b = LstmBias<Real>(h);
  p.sentence_w = UniformTensor<Real>({h, d}, s, rng);
  p.sentence_b = Tensor<Real>({d});
  p.decoder_w = UniformTensor<Real>({dw + h, 4 * h}, s, rng);
  p.decoder_b = LstmBias<Real>(h);
  p.output_w = UniformTensor<Real>({h, vocab_size}, s, rng);
  p.output_b = Tensor<Real>({vocab_size});
  p.init_h_w = UniformTensor<Real>({d, h}, s, rng);
  p.init_h_b = Tensor<Real>({h});
  p.init_c_w = UniformTensor<Real>({d, h}, s, rng);
  p.init_c_b = Tensor<Real>({h});
  return p;
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> ModelParams<Real>::Named() {
  return {
      {"image.weight", &image_w},       {"image.bias", &image_b},
      {"word_embedding", &word_embedding},
      {"encoder.weight", &encoder_w},   {"encoder.bias", &encoder_b},
      {"sentence.weight", &sentence_w}, {"sentence.bias", &sentence_b},
      {"decoder.weight", &decoder_w},   {"decoder.bias", &decoder_b},
      {"output.weight", &output_w},     {"output.bias", &output_b},
      {"init_h.weight", &init_h_w},     {"init_h.bias", &init_h_b},
      {"init_c.weight", &init_c_w},     {"init_c.bias", &init_c_b},
  };
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real>*>> ModelParams<Real>::Named() const {
  std::vector<std::pair<std::string, const Tensor<Real>*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->Named()) out.emplace_back(name, t);
  return out;
}

template <typename Real>
void ModelParams<Real>::ZeroGrad() {
  for (auto& [name, t] : Named()) t->ZeroGrad();
}

template <typename Real>
template <typename To>
ModelParams<To> ModelParams<Real>::CastTo() const {
  ModelParams<To> out;
  auto dst = out.Named();
  auto src = Named();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = Cast<To>(*src[i].second);
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::CastTo<double>() const;
template ModelParams<float> ModelParams<double>::CastTo<float>() const;
template ModelParams<float> ModelParams<float>::CastTo<float>() const;
template ModelParams<double> ModelParams<double>::CastTo<double>() const;

template <typename Real>
ParamNodes BindParams(Graph<Real>& g, ModelParams<Real>& p) {
  return {g.Variable(p.image_w),    g.Variable(p.image_b),    g.Variable(p.word_embedding),
          g.Variable(p.encoder_w),  g.Variable(p.encoder_b),  g.Variable(p.sentence_w),
          g.Variable(p.sentence_b), g.Variable(p.decoder_w),  g.Variable(p.decoder_b),
          g.Variable(p.output_w),   g.Variable(p.output_b),   g.Variable(p.init_h_w),
          g.Variable(p.init_h_b),   g.Variable(p.init_c_w),   g.Variable(p.init_c_b)};
}

template <typename Real>
ParamNodes BindConstants(Graph<Real>& g, const ModelParams<Real>& p) {
  return {g.Constant(p.image_w),    g.Constant(p.image_b),    g.Constant(p.word_embedding),
          g.Constant(p.encoder_w),  g.Constant(p.encoder_b),  g.Constant(p.sentence_w),
          g.Constant(p.sentence_b), g.Constant(p.decoder_w),  g.Constant(p.decoder_b),
          g.Constant(p.output_w),   g.Constant(p.output_b),   g.Constant(p.init_h_w),
          g.Constant(p.init_h_b),   g.Constant(p.init_c_w),   g.Constant(p.init_c_b)};
}

template <typename Real>
Tensor<Real> MeanPoolRegions(const Tensor<float>& features) {
  if (features.rank() != 3) {
    throw DimensionError("expected [B x R x dim] features, got " + ShapeString(features.shape()));
  }
  const std::size_t batch = features.dim(0), regions = features.dim(1), dim = features.dim(2);
  Tensor<Real> out({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t r = 0; r < regions; ++r) {
      const float* row = features.data().data() + (b * regions + r) * dim;
      for (std::size_t k = 0; k < dim; ++k) out.at(b, k) += static_cast<Real>(row[k]);
    }
    if (regions > 1) {
      for (std::size_t k = 0; k < dim; ++k) out.at(b, k) /= static_cast<Real>(regions);
    }
  }
  return out;
}

template <typename Real>
NodeId EncodeImages(Graph<Real>& g, const ParamNodes& p, const Tensor<float>& features) {
  Tensor<Real> pooled = MeanPoolRegions<Real>(features);
  if (pooled.cols() != g.value(p.image_w).rows()) {
    throw DimensionError(fmt::format("encode_image: feature dim {} but image projection expects {}",
                                     pooled.cols(), g.value(p.image_w).rows()));
  }
  const NodeId x = g.Constant(std::move(pooled));
  return g.L2Normalize(Project(g, x, p.image_w, p.image_b));
}

template <typename Real>
RegionNodes EncodeImageRegions(Graph<Real>& g, const ParamNodes& p,
                               const Tensor<float>& features) {
  if (features.rank() != 3) {
    throw DimensionError("expected [B x N x dim] features, got " + ShapeString(features.shape()));
  }
  const std::size_t batch = features.dim(0), regions = features.dim(1), dim = features.dim(2);
  if (dim != g.value(p.image_w).rows()) {
    throw DimensionError(fmt::format("encode_image_regions: feature dim {} but projection expects {}",
                                     dim, g.value(p.image_w).rows()));
  }
  Tensor<Real> flat({batch * regions, dim});
  std::copy(features.data().begin(), features.data().end(), flat.data().begin());
  const NodeId all = g.L2Normalize(Project(g, g.Constant(std::move(flat)), p.image_w, p.image_b));

  RegionNodes out;
  Tensor<Real> averaging({batch, batch * regions});
  for (std::size_t b = 0; b < batch; ++b) {
    out.regions.push_back(g.Slice(all, 0, b * regions, regions));
    for (std::size_t r = 0; r < regions; ++r) {
      averaging.at(b, b * regions + r) = Real(1) / static_cast<Real>(regions);
    }
  }
  out.means = g.MatMul(g.Constant(std::move(averaging)), all);
  return out;
}

template <typename Real>
SentenceNodes EncodeSentences(Graph<Real>& g, const ParamNodes& p, const TokenBatch& tokens,
                              bool with_words) {
  const std::size_t batch = tokens.batch, steps = tokens.steps;
  if (batch == 0 || steps == 0) throw ContractError("encode_sentence: empty batch");
  for (std::size_t b = 0; b < batch; ++b) {
    if (tokens.length(b) < 3) {
      throw ContractError(fmt::format("encode_sentence: item {} has no words", b));
    }
  }
  const std::size_t hidden = g.value(p.sentence_w).rows();
  LstmState state{g.Constant(Tensor<Real>({batch, hidden})),
                  g.Constant(Tensor<Real>({batch, hidden}))};
  std::vector<NodeId> hs;
  for (std::size_t t = 0; t < steps; ++t) {
    const NodeId x = g.GatherRows(p.word_embedding, Column(tokens, t));
    LstmState next = LstmCell(g, p.encoder_w, p.encoder_b, x, state, hidden);
    bool all_active = true;
    for (std::size_t b = 0; b < batch; ++b) all_active = all_active && tokens.active(b, t);
    if (!all_active) {
      Tensor<Real> keep({batch, hidden}), carry({batch, hidden});
      for (std::size_t b = 0; b < batch; ++b) {
        const Real m = tokens.active(b, t) ? Real(1) : Real(0);
        for (std::size_t k = 0; k < hidden; ++k) {
          keep.at(b, k) = m;
          carry.at(b, k) = Real(1) - m;
        }
      }
      const NodeId keep_node = g.Constant(std::move(keep));
      const NodeId carry_node = g.Constant(std::move(carry));
      next.h = g.Add(g.Mul(next.h, keep_node), g.Mul(state.h, carry_node));
      next.c = g.Add(g.Mul(next.c, keep_node), g.Mul(state.c, carry_node));
    }
    state = next;
    hs.push_back(state.h);
  }

  SentenceNodes out;
  out.embeddings = g.L2Normalize(Project(g, state.h, p.sentence_w, p.sentence_b));
  if (with_words) {
    // Row t * batch + b of the stacked states is item b after consuming token t.
    const NodeId stacked = g.Concat(hs, 0);
    std::vector<std::int32_t> rows;
    std::vector<std::size_t> counts;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t len = tokens.length(b);
      for (std::size_t t = 1; t + 1 < len; ++t) {
        rows.push_back(static_cast<std::int32_t>(t * batch + b));
      }
      counts.push_back(len - 2);
    }
    const NodeId words =
        g.L2Normalize(Project(g, g.GatherRows(stacked, std::move(rows)), p.sentence_w,
                              p.sentence_b));
    std::size_t offset = 0;
    for (std::size_t n : counts) {
      out.words.push_back(g.Slice(words, 0, offset, n));
      offset += n;
    }
  }
  return out;
}

template <typename Real>
LstmState InitialDecoderState(Graph<Real>& g, const ParamNodes& p, NodeId condition) {
  if (g.value(condition).cols() != g.value(p.init_h_w).rows()) {
    throw DimensionError(fmt::format("decoder: condition has {} columns, expected {}",
                                     g.value(condition).cols(), g.value(p.init_h_w).rows()));
  }
  return {g.Tanh(Project(g, condition, p.init_h_w, p.init_h_b)),
          g.Tanh(Project(g, condition, p.init_c_w, p.init_c_b))};
}

template <typename Real>
std::pair<LstmState, NodeId> DecoderStep(Graph<Real>& g, const ParamNodes& p,
                                         const LstmState& state,
                                         std::span<const TokenId> inputs) {
  const std::size_t hidden = g.value(p.output_w).rows();
  const NodeId x = g.GatherRows(p.word_embedding, std::vector<std::int32_t>(inputs.begin(),
                                                                            inputs.end()));
  const LstmState next = LstmCell(g, p.decoder_w, p.decoder_b, x, state, hidden);
  const NodeId log_probs = g.LogSoftmax(Project(g, next.h, p.output_w, p.output_b));
  return {next, log_probs};
}

template <typename Real>
std::vector<NodeId> DecodeTeacherForced(Graph<Real>& g, const ParamNodes& p, NodeId condition,
                                        const TokenBatch& target) {
  if (target.steps < 2) throw ContractError("decode: target needs <start> and <end>");
  if (g.value(condition).rows() != target.batch) {
    throw DimensionError(fmt::format("decode: {} conditions for {} targets",
                                     g.value(condition).rows(), target.batch));
  }
  LstmState state = InitialDecoderState(g, p, condition);
  std::vector<NodeId> out;
  for (std::size_t t = 0; t + 1 < target.steps; ++t) {
    auto [next, log_probs] = DecoderStep(g, p, state, Column(target, t));
    state = next;
    out.push_back(log_probs);
  }
  return out;
}

template <typename Real>
AttentionNodes AttentionSimilarity(Graph<Real>& g, NodeId regions, NodeId words,
                                   const AttentionOptions& options) {
  const Tensor<Real>& rv = g.value(regions);
  const Tensor<Real>& wv = g.value(words);
  if (rv.cols() != wv.cols()) {
    throw DimensionError(fmt::format("attention: regions {} vs words {}", ShapeString(rv.shape()),
                                     ShapeString(wv.shape())));
  }
  const std::size_t n_regions = rv.rows();
  const std::size_t n_words = wv.rows();

  const NodeId cos = g.MatMul(words, g.Transpose(regions));  // [T x N]
  const NodeId clamped = g.Relu(cos);
  const NodeId row_max = g.MaxLast(clamped);                 // [T x 1]
  Tensor<Real> zero_fix({n_words, 1});
  for (std::size_t t = 0; t < n_words; ++t) {
    zero_fix[t] = g.value(row_max)[t] > Real(0) ? Real(0) : Real(1);
  }
  const NodeId denom = g.Add(row_max, g.Constant(std::move(zero_fix)));
  const NodeId spread = g.MatMul(denom, g.Constant(Tensor<Real>({1, n_regions}, Real(1))));
  const NodeId normalized = g.Div(clamped, spread);
  const NodeId weights = g.Softmax(g.ScalarMul(normalized, options.temperature));
  const NodeId attended = g.MatMul(weights, regions);        // [T x D]
  const NodeId relevance = CosineSimilarity(g, words, attended);  // [T x 1]

  NodeId score;
  if (options.aggregation == Aggregation::kMean) {
    score = g.Mean(relevance);
  } else {
    const double lambda = options.aggregation_temperature;
    const NodeId scaled = g.ScalarMul(g.Transpose(relevance), lambda);  // [1 x T]
    const NodeId lse = g.Sub(g.Slice(scaled, 1, 0, 1), g.Slice(g.LogSoftmax(scaled), 1, 0, 1));
    score = g.Reshape(g.ScalarMul(lse, 1.0 / lambda), {1});
  }
  return {score, weights};
}

template <typename Real>
NodeId AttentionScoreMatrix(Graph<Real>& g, std::span<const NodeId> regions,
                            std::span<const NodeId> words, const AttentionOptions& options) {
  if (regions.empty() || words.empty()) throw ContractError("attention: empty score matrix");
  std::vector<NodeId> cells;
  cells.reserve(regions.size() * words.size());
  for (NodeId r : regions) {
    for (NodeId w : words) cells.push_back(AttentionSimilarity(g, r, w, options).score);
  }
  return g.Reshape(g.Concat(cells, 0), {regions.size(), words.size()});
}

template <typename Real>
std::vector<Real> EncodeImage(const Tensor<float>& features, const ModelParams<Real>& params) {
  Tensor<float> batched = features;
  batched.Reshape({1, features.rows(), features.cols()});
  Graph<Real> g;
  const ParamNodes p = BindConstants(g, params);
  const auto& v = g.value(EncodeImages(g, p, batched));
  return {v.data().begin(), v.data().end()};
}

template <typename Real>
RegionEncoding<Real> EncodeImageRegions(const Tensor<float>& features,
                                        const ModelParams<Real>& params) {
  Tensor<float> batched = features;
  batched.Reshape({1, features.rows(), features.cols()});
  Graph<Real> g;
  const ParamNodes p = BindConstants(g, params);
  const RegionNodes nodes = EncodeImageRegions(g, p, batched);
  const auto& mean = g.value(nodes.means);
  return {g.value(nodes.regions[0]), {mean.data().begin(), mean.data().end()}};
}

template <typename Real>
SentenceEncoding<Real> EncodeSentence(std::span<const TokenId> tokens,
                                      const ModelParams<Real>& params) {
  const std::vector<TokenId> seq(tokens.begin(), tokens.end());
  const TokenBatch batch = data::PadSequences(std::span(&seq, 1));
  Graph<Real> g;
  const ParamNodes p = BindConstants(g, params);
  const SentenceNodes nodes = EncodeSentences(g, p, batch, true);
  const auto& e = g.value(nodes.embeddings);
  return {{e.data().begin(), e.data().end()}, g.value(nodes.words[0])};
}

template <typename Real>
Tensor<Real> DecodeTeacherForced(std::span<const Real> condition,
                                 std::span<const TokenId> target,
                                 const ModelParams<Real>& params) {
  const std::vector<TokenId> seq(target.begin(), target.end());
  const TokenBatch batch = data::PadSequences(std::span(&seq, 1));
  Graph<Real> g;
  const ParamNodes p = BindConstants(g, params);
  const NodeId cond = g.Constant(ToTensor<Real>(condition, {1, condition.size()}));
  const std::vector<NodeId> steps = DecodeTeacherForced(g, p, cond, batch);
  const std::size_t vocab = params.vocab_size();
  Tensor<Real> out({steps.size(), vocab});
  for (std::size_t t = 0; t < steps.size(); ++t) {
    std::copy_n(g.value(steps[t]).data().begin(), vocab, out.data().begin() + t * vocab);
  }
  return out;
}

template <typename Real>
std::vector<std::vector<TokenId>> DecodeGreedyBatch(const Tensor<Real>& conditions,
                                                    const ModelParams<Real>& params,
                                                    std::size_t max_len) {
  const std::size_t batch = conditions.rows();
  Graph<Real> g;
  const ParamNodes p = BindConstants(g, params);
  LstmState state = InitialDecoderState(g, p, g.Constant(conditions));
  std::vector<std::vector<TokenId>> out(batch);
  std::vector<bool> done(batch, false);
  std::vector<TokenId> inputs(batch, data::Vocabulary::kStart);
  for (std::size_t step = 0; step < max_len; ++step) {
    auto [next, log_probs] = DecoderStep(g, p, state, inputs);
    state = next;
    const Tensor<Real>& lp = g.value(log_probs);
    bool all_done = true;
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* row = lp.data().data() + b * lp.cols();
      const auto best = static_cast<TokenId>(std::max_element(row, row + lp.cols()) - row);
      inputs[b] = best;
      if (done[b]) continue;
      if (best == data::Vocabulary::kEnd) {
        done[b] = true;
      } else {
        out[b].push_back(best);
      }
      all_done = all_done && done[b];
    }
    if (all_done) break;
  }
  return out;
}

template <typename Real>
std::vector<TokenId> DecodeGreedy(std::span<const Real> condition,
                                  const ModelParams<Real>& params, std::size_t max_len) {
  if (max_len == 0) throw ContractError("decode_greedy: max_len must be >= 1");
  return DecodeGreedyBatch(ToTensor<Real>(condition, {1, condition.size()}), params, max_len)[0];
}

template <typename Real>
Real AttentionSimilarity(const Tensor<Real>& regions, const Tensor<Real>& words,
                         const AttentionOptions& options) {
  Graph<Real> g;
  return g.value(AttentionSimilarity(g, g.Constant(regions), g.Constant(words), options).score)
      .item();
}

#define STT_INSTANTIATE_MODEL(Real)                                                           \
  template ParamNodes BindParams<Real>(Graph<Real>&, ModelParams<Real>&);                     \
  template ParamNodes BindConstants<Real>(Graph<Real>&, const ModelParams<Real>&);            \
  template Tensor<Real> MeanPoolRegions<Real>(const Tensor<float>&);                          \
  template NodeId EncodeImages<Real>(Graph<Real>&, const ParamNodes&, const Tensor<float>&);  \
  template RegionNodes EncodeImageRegions<Real>(Graph<Real>&, const ParamNodes&,              \
                                                const Tensor<float>&);                        \
  template SentenceNodes EncodeSentences<Real>(Graph<Real>&, const ParamNodes&,               \
                                               const TokenBatch&, bool);                      \
  template LstmState InitialDecoderState<Real>(Graph<Real>&, const ParamNodes&, NodeId);      \
  template std::pair<LstmState, NodeId> DecoderStep<Real>(                                    \
      Graph<Real>&, const ParamNodes&, const LstmState&, std::span<const TokenId>);           \
  template std::vector<NodeId> DecodeTeacherForced<Real>(Graph<Real>&, const ParamNodes&,     \
                                                         NodeId, const TokenBatch&);          \
  template AttentionNodes AttentionSimilarity<Real>(Graph<Real>&, NodeId, NodeId,             \
                                                    const AttentionOptions&);                 \
  template NodeId AttentionScoreMatrix<Real>(Graph<Real>&, std::span<const NodeId>,           \
                                             std::span<const NodeId>,                         \
                                             const AttentionOptions&);                        \
  template std::vector<Real> EncodeImage<Real>(const Tensor<float>&,                          \
                                               const ModelParams<Real>&);                     \
  template RegionEncoding<Real> EncodeImageRegions<Real>(const Tensor<float>&,                \
                                                         const ModelParams<Real>&);           \
  template SentenceEncoding<Real> EncodeSentence<Real>(std::span<const TokenId>,              \
                                                       const ModelParams<Real>&);             \
  template Tensor<Real> DecodeTeacherForced<Real>(std::span<const Real>,                      \
                                                  std::span<const TokenId>,                   \
                                                  const ModelParams<Real>&);                  \
  template std::vector<std::vector<TokenId>> DecodeGreedyBatch<Real>(                         \
      const Tensor<Real>&, const ModelParams<Real>&, std::size_t);                            \
  template std::vector<TokenId> DecodeGreedy<Real>(std::span<const Real>,                     \
                                                   const ModelParams<Real>&, std::size_t);    \
  template Real AttentionSimilarity<Real>(const Tensor<Real>&, const Tensor<Real>&,           \
                                          const AttentionOptions&);

STT_INSTANTIATE_MODEL(float)
STT_INSTANTIATE_MODEL(double)

#undef STT_INSTANTIATE_MODEL

}  // namespace stt::model
