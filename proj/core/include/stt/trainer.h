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

#ifndef STT_TRAINER_H_
#define STT_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <span>
#include <vector>

#include "stt/checkpoint.h"
#include "stt/feature_store.h"
#include "stt/gradcheck.h"
#include "stt/graph.h"
#include "stt/hyperparams.h"
#include "stt/losses.h"
#include "stt/model.h"
#include "stt/samples.h"

namespace stt::train {

struct LossNodes {
  NodeId rank;
  NodeId ic;
  NodeId sp;
  NodeId total;
};

// The joint objective for one batch: image and caption A are embedded,
// ranked against each other, and both embeddings are decoded into caption
// B through the one shared decoder.
template <typename Real>
LossNodes BuildLoss(Graph<Real>& g, const model::ParamNodes& p, const data::Batch& batch,
                    const model::HyperParams& hp);

struct LogEntry {
  std::uint64_t iter = 0;
  double l_rank = 0.0;
  double l_ic = 0.0;
  double l_sp = 0.0;
  double total = 0.0;

  bool operator==(const LogEntry&) const = default;
};

// Forward, backward, clip and Adam update for one batch.
LogEntry TrainStep(model::ModelParams<float>& params, AdamState& adam, const data::Batch& batch,
                   const model::HyperParams& hp);

struct TrainOptions {
  // Per-epoch and final checkpoints plus train_log.csv go here; empty means
  // nothing is written.
  std::filesystem::path out_dir;
  // Continue from a checkpoint written at an epoch boundary.
  std::optional<Checkpoint> resume;
  std::uint64_t vocab_hash = 0;
  // Stop after this many optimizer steps in total (counting resumed ones).
  std::optional<std::uint64_t> max_iterations;
  std::function<void(const LogEntry&)> on_iteration;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogEntry> log;
};

// Runs hp.epochs epochs of shuffled mini-batches. A NaN loss or gradient
// writes crash.sttc into out_dir (when set) and rethrows NumericError.
TrainResult Train(const model::HyperParams& hp, const data::FeatureStore& store,
                  std::span<const data::Sample> samples, std::size_t vocab_size,
                  const TrainOptions& options = {});

enum class LossTerm { kRank, kCaption, kParaphrase };

std::string_view ToString(LossTerm term);

// Finite-difference check of one loss term with respect to every model
// parameter, on a tiny seeded model and batch in 64-bit precision.
GradCheckReport GradCheckLoss(LossTerm term, model::SimilarityMode mode,
                              model::NegativeMode negatives, std::uint64_t seed,
                              double tolerance, double step = kFiniteDifferenceStep);

// CSV with header "iter,l_rank,l_ic,l_sp,total".
std::string FormatLossLog(std::span<const LogEntry> log);
void WriteLossLog(std::span<const LogEntry> log, const std::filesystem::path& path);

}  // namespace stt::train

#endif  // STT_TRAINER_H_
