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

#ifndef STT_LOSSES_H_
#define STT_LOSSES_H_

#include <cstdint>
#include <span>

#include "stt/graph.h"
#include "stt/hyperparams.h"
#include "stt/samples.h"

namespace stt::loss {

using model::NegativeMode;

// Hinge ranking loss over a [B x B] score matrix whose row k is image k and
// column k its matched caption:
//   image->text: max(0, margin + S[i][k] - S[i][i]) over captions k != i
//   text->image: max(0, margin + S[m][k] - S[k][k]) over images m != k
// Pairs whose image ids coincide are not negatives. kSum adds every hinge
// term, kHardest keeps only the largest per query. The total is divided by
// B.
template <typename Real>
NodeId RankingLossFromScores(Graph<Real>& g, NodeId scores,
                             std::span<const std::uint64_t> image_ids, double margin,
                             NegativeMode mode);

// Same loss on unit embeddings; scores are image_embs * caption_embs^T.
template <typename Real>
NodeId RankingLoss(Graph<Real>& g, NodeId image_embs, NodeId caption_embs,
                   std::span<const std::uint64_t> image_ids, double margin,
                   NegativeMode mode);

// Per item -sum_t mask[b][t] * log_probs[t][b][targets[b][t]], averaged over
// the B items. step_log_probs[t] is [B x V]; targets/mask are [B x steps].
// Throws ContractError when an item has no active step.
template <typename Real>
NodeId SequenceCrossEntropy(Graph<Real>& g, std::span<const NodeId> step_log_probs,
                            const data::TokenBatch& targets);

// Drops the first column: the scoring targets that line up with
// DecodeTeacherForced outputs.
data::TokenBatch ShiftTargets(const data::TokenBatch& tokens);

struct Lambdas {
  double rank = 1.0;
  double ic = 1.0;
  double sp = 1.0;
};

struct LossBreakdown {
  double l_rank = 0.0;
  double l_ic = 0.0;
  double l_sp = 0.0;
  double total = 0.0;
  Lambdas lambdas;
};

// total = rank * l_rank + ic * l_ic + sp * l_sp. Throws ContractError for
// negative weights or non-finite components.
LossBreakdown CombinedLoss(double l_rank, double l_ic, double l_sp, const Lambdas& lambdas);

// Differentiable weighted sum of three scalar loss nodes.
template <typename Real>
NodeId CombineLossNodes(Graph<Real>& g, NodeId l_rank, NodeId l_ic, NodeId l_sp,
                        const Lambdas& lambdas);

}  // namespace stt::loss

#endif  // STT_LOSSES_H_
