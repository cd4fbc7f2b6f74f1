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

#include "stt/losses.h"

#include <cmath>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::loss {

template <typename Real>
NodeId RankingLossFromScores(Graph<Real>& g, NodeId scores,
                             std::span<const std::uint64_t> image_ids, double margin,
                             NegativeMode mode) {
  const Tensor<Real>& s = g.value(scores);
  const std::size_t batch = s.rows();
  if (batch < 1) throw ContractError("ranking_loss: empty batch");
  if (s.rank() != 2 || s.cols() != batch || image_ids.size() != batch) {
    throw DimensionError(fmt::format("ranking_loss: scores {} with {} image ids",
                                     ShapeString(s.shape()), image_ids.size()));
  }

  Tensor<Real> eye({batch, batch});
  Tensor<Real> negatives({batch, batch});
  for (std::size_t i = 0; i < batch; ++i) {
    eye.at(i, i) = Real(1);
    for (std::size_t k = 0; k < batch; ++k) {
      negatives.at(i, k) = image_ids[i] != image_ids[k] ? Real(1) : Real(0);
    }
  }
  const NodeId neg = g.Constant(std::move(negatives));
  const NodeId diag_col = g.MatMul(g.Mul(scores, g.Constant(std::move(eye))),
                                   g.Constant(Tensor<Real>({batch, 1}, Real(1))));
  // positive_row[i][k] = S[i][i]; positive_col[i][k] = S[k][k].
  const NodeId positive_row =
      g.MatMul(diag_col, g.Constant(Tensor<Real>({1, batch}, Real(1))));
  const NodeId positive_col = g.Transpose(positive_row);

  const NodeId cost_caption = g.Mul(g.Relu(g.AddScalar(g.Sub(scores, positive_row), margin)), neg);
  const NodeId cost_image = g.Mul(g.Relu(g.AddScalar(g.Sub(scores, positive_col), margin)), neg);

  NodeId total;
  if (mode == NegativeMode::kSum) {
    total = g.Add(g.Sum(cost_caption), g.Sum(cost_image));
  } else {
    total = g.Add(g.Sum(g.MaxLast(cost_caption)), g.Sum(g.MaxLast(g.Transpose(cost_image))));
  }
  return g.ScalarMul(total, 1.0 / static_cast<double>(batch));
}

template <typename Real>
NodeId RankingLoss(Graph<Real>& g, NodeId image_embs, NodeId caption_embs,
                   std::span<const std::uint64_t> image_ids, double margin,
                   NegativeMode mode) {
  const Tensor<Real>& iv = g.value(image_embs);
  const Tensor<Real>& cv = g.value(caption_embs);
  if (iv.rows() != cv.rows() || iv.cols() != cv.cols()) {
    throw DimensionError(fmt::format("ranking_loss: image embeddings {} vs caption embeddings {}",
                                     ShapeString(iv.shape()), ShapeString(cv.shape())));
  }
  return RankingLossFromScores(g, g.MatMul(image_embs, g.Transpose(caption_embs)), image_ids,
                               margin, mode);
}

data::TokenBatch ShiftTargets(const data::TokenBatch& tokens) {
  if (tokens.steps < 2) throw ContractError("shift_targets: need at least two steps");
  data::TokenBatch out;
  out.batch = tokens.batch;
  out.steps = tokens.steps - 1;
  for (std::size_t b = 0; b < tokens.batch; ++b) {
    for (std::size_t t = 1; t < tokens.steps; ++t) {
      out.ids.push_back(tokens.at(b, t));
      out.mask.push_back(tokens.mask[b * tokens.steps + t]);
    }
  }
  return out;
}

template <typename Real>
NodeId SequenceCrossEntropy(Graph<Real>& g, std::span<const NodeId> step_log_probs,
                            const data::TokenBatch& targets) {
  if (step_log_probs.size() != targets.steps) {
    throw DimensionError(fmt::format("sequence_cross_entropy: {} steps of log-probs, {} targets",
                                     step_log_probs.size(), targets.steps));
  }
  for (std::size_t b = 0; b < targets.batch; ++b) {
    if (targets.length(b) == 0) {
      throw ContractError(fmt::format("sequence_cross_entropy: item {} is fully masked", b));
    }
  }
  std::vector<NodeId> terms;
  for (std::size_t t = 0; t < targets.steps; ++t) {
    const Tensor<Real>& lp = g.value(step_log_probs[t]);
    if (lp.rows() != targets.batch) {
      throw DimensionError(fmt::format("sequence_cross_entropy: step {} has shape {}, batch {}", t,
                                       ShapeString(lp.shape()), targets.batch));
    }
    Tensor<Real> pick({lp.rows(), lp.cols()});
    bool any = false;
    for (std::size_t b = 0; b < targets.batch; ++b) {
      if (!targets.active(b, t)) continue;
      const auto id = targets.at(b, t);
      if (id < 0 || static_cast<std::size_t>(id) >= lp.cols()) {
        throw DimensionError(fmt::format("sequence_cross_entropy: target {} outside vocabulary {}",
                                         id, lp.cols()));
      }
      pick.at(b, static_cast<std::size_t>(id)) = Real(1);
      any = true;
    }
    if (any) terms.push_back(g.Sum(g.Mul(step_log_probs[t], g.Constant(std::move(pick)))));
  }
  const NodeId total = g.Sum(g.Concat(terms, 0));
  return g.ScalarMul(total, -1.0 / static_cast<double>(targets.batch));
}

LossBreakdown CombinedLoss(double l_rank, double l_ic, double l_sp, const Lambdas& lambdas) {
  if (lambdas.rank < 0 || lambdas.ic < 0 || lambdas.sp < 0) {
    throw ContractError(fmt::format("combined_loss: negative lambda ({}, {}, {})", lambdas.rank,
                                    lambdas.ic, lambdas.sp));
  }
  if (!std::isfinite(l_rank) || !std::isfinite(l_ic) || !std::isfinite(l_sp)) {
    throw ContractError("combined_loss: non-finite loss component");
  }
  LossBreakdown out;
  out.l_rank = l_rank;
  out.l_ic = l_ic;
  out.l_sp = l_sp;
  out.lambdas = lambdas;
  out.total = lambdas.rank * l_rank + lambdas.ic * l_ic + lambdas.sp * l_sp;
  return out;
}

template <typename Real>
NodeId CombineLossNodes(Graph<Real>& g, NodeId l_rank, NodeId l_ic, NodeId l_sp,
                        const Lambdas& lambdas) {
  if (lambdas.rank < 0 || lambdas.ic < 0 || lambdas.sp < 0) {
    throw ContractError("combined_loss: negative lambda");
  }
  return g.Add(g.Add(g.ScalarMul(l_rank, lambdas.rank), g.ScalarMul(l_ic, lambdas.ic)),
               g.ScalarMul(l_sp, lambdas.sp));
}

#define STT_INSTANTIATE_LOSSES(Real)                                                        \
  template NodeId RankingLossFromScores<Real>(Graph<Real>&, NodeId,                         \
                                              std::span<const std::uint64_t>, double,       \
                                              NegativeMode);                                \
  template NodeId RankingLoss<Real>(Graph<Real>&, NodeId, NodeId,                           \
                                    std::span<const std::uint64_t>, double, NegativeMode);  \
  template NodeId SequenceCrossEntropy<Real>(Graph<Real>&, std::span<const NodeId>,         \
                                             const data::TokenBatch&);                      \
  template NodeId CombineLossNodes<Real>(Graph<Real>&, NodeId, NodeId, NodeId, const Lambdas&);

STT_INSTANTIATE_LOSSES(float)
STT_INSTANTIATE_LOSSES(double)

#undef STT_INSTANTIATE_LOSSES

}  // namespace stt::loss
