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

#include "stt/trainer.h"

#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::train {

using model::HyperParams;
using model::ModelParams;
using model::ParamNodes;
using model::SimilarityMode;

template <typename Real>
LossNodes BuildLoss(Graph<Real>& g, const ParamNodes& p, const data::Batch& batch,
                    const HyperParams& hp) {
  const loss::Lambdas lambdas{hp.lambda_rank, hp.lambda_ic, hp.lambda_sp};
  const bool attention = hp.mode == SimilarityMode::kAttention;
  if (attention && batch.features.dim(1) != hp.regions) {
    throw ContractError(fmt::format("attention mode expects {} regions per image, batch has {}",
                                    hp.regions, batch.features.dim(1)));
  }

  const model::SentenceNodes caption_a =
      model::EncodeSentences(g, p, batch.caption_a, attention);
  NodeId rank;
  NodeId image_condition;
  if (attention) {
    const model::RegionNodes regions = model::EncodeImageRegions(g, p, batch.features);
    const NodeId scores = model::AttentionScoreMatrix(g, std::span(regions.regions),
                                                      std::span(caption_a.words),
                                                      model::AttentionOptions::From(hp));
    rank = loss::RankingLossFromScores(g, scores, batch.image_ids, hp.margin, hp.negatives);
    image_condition = regions.means;
  } else {
    const NodeId images = model::EncodeImages(g, p, batch.features);
    rank = loss::RankingLoss(g, images, caption_a.embeddings, batch.image_ids, hp.margin,
                             hp.negatives);
    image_condition = images;
  }

  const data::TokenBatch targets = loss::ShiftTargets(batch.caption_b);
  const auto ic_steps = model::DecodeTeacherForced(g, p, image_condition, batch.caption_b);
  const NodeId ic = loss::SequenceCrossEntropy(g, std::span(ic_steps), targets);
  const auto sp_steps = model::DecodeTeacherForced(g, p, caption_a.embeddings, batch.caption_b);
  const NodeId sp = loss::SequenceCrossEntropy(g, std::span(sp_steps), targets);
  return {rank, ic, sp, loss::CombineLossNodes(g, rank, ic, sp, lambdas)};
}

template LossNodes BuildLoss<float>(Graph<float>&, const ParamNodes&, const data::Batch&,
                                    const HyperParams&);
template LossNodes BuildLoss<double>(Graph<double>&, const ParamNodes&, const data::Batch&,
                                     const HyperParams&);

LogEntry TrainStep(ModelParams<float>& params, AdamState& adam, const data::Batch& batch,
                   const HyperParams& hp) {
  params.ZeroGrad();
  Graph<float> g;
  const ParamNodes p = model::BindParams(g, params);
  const LossNodes losses = BuildLoss(g, p, batch, hp);

  LogEntry entry;
  entry.l_rank = g.value(losses.rank).item();
  entry.l_ic = g.value(losses.ic).item();
  entry.l_sp = g.value(losses.sp).item();
  entry.total = g.value(losses.total).item();
  if (!std::isfinite(entry.total)) {
    throw NumericError(fmt::format("non-finite loss (rank={} ic={} sp={})", entry.l_rank,
                                   entry.l_ic, entry.l_sp));
  }
  g.Backward(losses.total);

  const NamedParams named = params.Named();
  ClipGradNorm(named, hp.grad_clip);
  AdamStep(named, adam, hp.learning_rate);
  entry.iter = adam.step;
  return entry;
}

std::string_view ToString(LossTerm term) {
  switch (term) {
    case LossTerm::kRank: return "l_rank";
    case LossTerm::kCaption: return "l_ic";
    case LossTerm::kParaphrase: return "l_sp";
  }
  return "?";
}

GradCheckReport GradCheckLoss(LossTerm term, SimilarityMode mode, model::NegativeMode negatives,
                              std::uint64_t seed, double tolerance, double step) {
  constexpr std::size_t kBatch = 3, kRegions = 3, kFeatureDim = 5, kVocab = 9;
  HyperParams hp = HyperParams::Toy();
  hp.cvs_dim = 4;
  hp.word_dim = 3;
  hp.hidden_dim = 3;
  hp.init_scale = 0.5;
  hp.mode = mode;
  hp.negatives = negatives;
  hp.regions = mode == SimilarityMode::kAttention ? kRegions : 1;
  // Soft attention keeps the finite differences away from saturation.
  hp.attention_temperature = 2.0;

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0; };
  auto params = ModelParams<double>::Initialize(hp, kFeatureDim, kVocab, seed);

  data::FeatureStore store(hp.regions, kFeatureDim);
  std::vector<data::Sample> samples;
  std::vector<float> values(hp.regions * kFeatureDim);
  for (std::size_t b = 0; b < kBatch; ++b) {
    for (float& v : values) v = static_cast<float>(uniform());
    store.Add(b, values);
    data::Sample s{b, {}, {}};
    for (auto* caption : {&s.caption_a, &s.caption_b}) {
      const std::size_t words = 1 + rng() % 3;
      caption->push_back(data::Vocabulary::kStart);
      for (std::size_t w = 0; w < words; ++w) {
        caption->push_back(static_cast<data::TokenId>(data::Vocabulary::kNumReserved +
                                                      rng() % (kVocab - 4)));
      }
      caption->push_back(data::Vocabulary::kEnd);
    }
    samples.push_back(std::move(s));
  }
  std::vector<const data::Sample*> order;
  for (const auto& s : samples) order.push_back(&s);
  const data::Batch batch = data::AssembleBatch(order, store);

  std::vector<Tensor<double>> inputs;
  for (const auto& [name, tensor] : params.Named()) inputs.push_back(*tensor);
  const GraphFunction fn = [&](Graph<double>& g, std::span<const NodeId> in) {
    const ParamNodes p{in[0], in[1], in[2],  in[3],  in[4],  in[5],  in[6], in[7],
                       in[8], in[9], in[10], in[11], in[12], in[13], in[14]};
    const LossNodes losses = BuildLoss(g, p, batch, hp);
    switch (term) {
      case LossTerm::kRank: return losses.rank;
      case LossTerm::kCaption: return losses.ic;
      case LossTerm::kParaphrase: return losses.sp;
    }
    return losses.total;
  };
  return GradCheckFunction(std::string(ToString(term)), fn, inputs, tolerance, step);
}

std::string FormatLossLog(std::span<const LogEntry> log) {
  std::string out = "iter,l_rank,l_ic,l_sp,total\n";
  for (const LogEntry& e : log) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g}\n", e.iter, e.l_rank, e.l_ic, e.l_sp,
                       e.total);
  }
  return out;
}

void WriteLossLog(std::span<const LogEntry> log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write training log " + path.string());
  out << FormatLossLog(log);
}

TrainResult Train(const HyperParams& hp, const data::FeatureStore& store,
                  std::span<const data::Sample> samples, std::size_t vocab_size,
                  const TrainOptions& options) {
  hp.Validate();
  if (samples.empty()) throw ContractError("train: no samples");
  if (store.size() == 0) throw ContractError("train: empty feature store");
  if (hp.mode == SimilarityMode::kAttention && store.regions() != hp.regions) {
    throw ConfigError("regions", fmt::format("attention mode needs {} regions, features have {}",
                                             hp.regions, store.regions()));
  }

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  if (options.resume) {
    ckpt = *options.resume;
    if (ckpt.params.feature_dim() != store.dim() || ckpt.params.vocab_size() != vocab_size) {
      throw ContractError("train: resume checkpoint does not match features/vocabulary");
    }
    ckpt.hyper = hp;
    if (!ckpt.adam) {
      ckpt.adam = AdamState::ZerosLike(ckpt.params.Named(), hp.adam_beta1, hp.adam_beta2,
                                       hp.adam_epsilon);
    }
  } else {
    ckpt.hyper = hp;
    ckpt.params = ModelParams<float>::Initialize(hp, store.dim(), vocab_size, hp.seed);
    ckpt.adam = AdamState::ZerosLike(ckpt.params.Named(), hp.adam_beta1, hp.adam_beta2,
                                     hp.adam_epsilon);
    ckpt.epoch = 0;
  }
  ckpt.vocab_hash = options.vocab_hash;

  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir);

  auto reached_limit = [&] {
    return options.max_iterations && ckpt.adam->step >= *options.max_iterations;
  };

  for (std::uint64_t epoch = ckpt.epoch; epoch < hp.epochs && !reached_limit(); ++epoch) {
    const auto batches = data::MakeBatches(samples, store, hp.batch_size, hp.seed, epoch);
    for (const data::Batch& batch : batches) {
      if (reached_limit()) break;
      try {
        const LogEntry entry = TrainStep(ckpt.params, *ckpt.adam, batch, hp);
        result.log.push_back(entry);
        if (options.on_iteration) options.on_iteration(entry);
      } catch (const NumericError&) {
        if (write) {
          SaveCheckpoint(ckpt, options.out_dir / "crash.sttc");
          WriteLossLog(result.log, options.out_dir / "train_log.csv");
        }
        throw;
      }
    }
    if (reached_limit() && epoch + 1 < hp.epochs) {
      // Stopped mid-epoch; the checkpoint keeps the last completed epoch.
      break;
    }
    ckpt.epoch = epoch + 1;
    if (write) {
      SaveCheckpoint(ckpt, options.out_dir / fmt::format("checkpoint_epoch_{}.sttc", ckpt.epoch));
      WriteLossLog(result.log, options.out_dir / "train_log.csv");
    }
  }

  if (write) {
    SaveCheckpoint(ckpt, options.out_dir / "final.sttc");
    WriteLossLog(result.log, options.out_dir / "train_log.csv");
  }
  return result;
}

}  // namespace stt::train
