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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.h"
#include "stt/checkpoint.h"
#include "stt/gradcheck.h"
#include "stt/losses.h"
#include "stt/model.h"
#include "stt/retrieval.h"
#include "stt/tasks.h"
#include "stt/text_metrics.h"
#include "stt/trainer.h"
#include "toy_pipeline.h"

namespace stt {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using testing::Matrix;

Tensor<double> FromRows(const Matrix& m) {
  std::vector<double> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor<double>({m.size(), m[0].size()}, std::move(flat));
}

Matrix UnitMat(testing::Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m = rng.Mat(rows, cols);
  for (auto& r : m) r = testing::Unit(r);
  return m;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome GradientVerification() {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kInstances = 20;
  double worst_op = 0.0, worst_loss = 0.0;
  std::string worst_op_name, worst_loss_name;
  bool ok = true;
  for (OpKind kind : AllOpKinds()) {
    for (int seed = 0; seed < kInstances; ++seed) {
      const auto r = GradCheck(kind, {}, 1e-6, static_cast<std::uint64_t>(seed));
      ok = ok && r.pass;
      if (r.max_rel_err >= worst_op) {
        worst_op = r.max_rel_err;
        worst_op_name = r.name;
      }
    }
  }
  for (auto term : {train::LossTerm::kRank, train::LossTerm::kCaption,
                    train::LossTerm::kParaphrase}) {
    for (int seed = 0; seed < kInstances; ++seed) {
      const auto r = train::GradCheckLoss(term, model::SimilarityMode::kGlobal,
                                          model::NegativeMode::kSum,
                                          static_cast<std::uint64_t>(seed), 1e-5);
      ok = ok && r.pass;
      if (r.max_rel_err >= worst_loss) {
        worst_loss = r.max_rel_err;
        worst_loss_name = std::string(train::ToString(term));
      }
    }
  }
  const double elapsed = Seconds(start);
  ok = ok && elapsed < 60.0;
  return {ok, fmt::format("{} op kinds + 3 losses x {} instances; worst op {:.2e} ({}), worst "
                          "loss {:.2e} ({}); {:.1f}s",
                          AllOpKinds().size(), kInstances, worst_op, worst_op_name, worst_loss,
                          worst_loss_name, elapsed)};
}

Outcome ToyOverfit() {
  const auto start = std::chrono::steady_clock::now();
  const auto toy = testing::RunToy(0, 500);
  const double elapsed = Seconds(start);
  const auto& r = toy.retrieval;
  const bool ok = toy.result.log.size() <= 500 && r.image_to_text[0] == 100.0 &&
                  r.text_to_image[0] == 100.0 && toy.teacher_forced_accuracy >= 0.95 &&
                  toy.caption.bleu[0] >= 0.95 && elapsed < 120.0;
  return {ok, fmt::format("{} iters; R@1 {:.1f}/{:.1f}; teacher-forced acc {:.4f}; caption "
                          "B@1 {:.3f}; final loss {:.3f}; {:.1f}s",
                          toy.result.log.size(), r.image_to_text[0], r.text_to_image[0],
                          toy.teacher_forced_accuracy, toy.caption.bleu[0],
                          toy.result.log.back().total, elapsed)};
}

Outcome RankingOracle() {
  testing::Rng rng(101);
  double worst = 0.0;
  bool ordered = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + rng.Index(8);
    const Matrix images = UnitMat(rng, b, 6);
    const Matrix captions = UnitMat(rng, b, 6);
    std::vector<std::uint64_t> ids(b);
    for (auto& id : ids) id = rng.Index(b + 3);
    Matrix s(b, std::vector<double>(b));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) s[i][j] = testing::DotProduct(images[i], captions[j]);
    }
    auto loss = [&](model::NegativeMode mode) {
      Graph<double> g;
      return g.value(loss::RankingLoss(g, g.Constant(FromRows(images)),
                                       g.Constant(FromRows(captions)), ids, 0.2, mode))
          .item();
    };
    const double sum = loss(model::NegativeMode::kSum);
    const double hard = loss(model::NegativeMode::kHardest);
    worst = std::max(worst, std::abs(sum - testing::BruteForceRankingLoss(s, ids, 0.2, false)));
    ordered = ordered && hard <= sum;
  }
  return {worst <= 1e-6 && ordered,
          fmt::format("100 batches; max |loss - brute force| {:.2e}; hardest <= sum: {}", worst,
                      ordered)};
}

Outcome ParaphraseProtocol() {
  bool ok = data::ParaphrasePairIndices(5).size() == 20;
  for (std::size_t k = 2; k <= 12; ++k) {
    ok = ok && data::ParaphrasePairIndices(k).size() == k * (k - 1);
  }
  const auto images = data::GroupByImage(data::ReadCaptionFile(testing::TestDataPath("toy.jsonl")));
  std::vector<std::string> corpus;
  for (const auto& im : images) corpus.insert(corpus.end(), im.captions.begin(), im.captions.end());
  const auto samples = data::BuildSamples(images, data::Vocabulary::Build(corpus, 1));
  ok = ok && samples.size() == images.size() * 20;
  return {ok, fmt::format("5 captions -> {} pairs; k(k-1) for k = 2..12; toy set {} samples",
                          data::ParaphrasePairIndices(5).size(), samples.size())};
}

// Each trial scores a square 50x50 matrix (one column per image) and a
// 50-image matrix whose images own several columns.
Outcome RetrievalOracle() {
  testing::Rng rng(202);
  std::size_t mismatches = 0, checks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    for (std::size_t captions : {std::size_t{50}, std::size_t{50 + 1 + rng.Index(100)}}) {
      const auto owner = testing::RandomOwners(rng, 50, captions);
      const Matrix s = rng.Mat(50, captions);
      std::vector<double> flat;
      for (const auto& r : s) flat.insert(flat.end(), r.begin(), r.end());
      const eval::SimilarityMatrix sim(50, flat, owner);
      for (std::size_t k : {1, 5, 10}) {
        for (bool i2t : {true, false}) {
          const double got = eval::RecallAtK(
              sim, i2t ? eval::Direction::kImageToText : eval::Direction::kTextToImage, k);
          ++checks;
          if (std::abs(got - testing::BruteForceRecall(s, owner, i2t, k)) > 1e-9) ++mismatches;
        }
      }
    }
  }
  const eval::SimilarityMatrix hand(3, {0.9, 0.1, 0.2, 0.3, 0.2, 0.8, 0.1, 0.7, 0.6}, {0, 1, 2});
  const double r1 = eval::RecallAtK(hand, eval::Direction::kImageToText, 1);
  return {mismatches == 0 && std::abs(r1 - 33.33) <= 0.01,
          fmt::format("200 trials (50x50 and 50-image multi-column), {} of {} recall values "
                      "differ from the full-sort oracle; 3x3 R@1 {:.2f}",
                      mismatches, checks, r1)};
}

Outcome FiveFold() {
  model::HyperParams hp;
  hp.cvs_dim = 8;
  hp.word_dim = 4;
  hp.hidden_dim = 6;
  const auto params = eval::EvalParams::Initialize(hp, 6, 20, 4);
  testing::Rng rng(303);
  data::FeatureStore store(1, 6);
  eval::RetrievalSet set;
  for (std::size_t i = 0; i < 5000; ++i) {
    std::vector<float> f(6);
    for (float& x : f) x = static_cast<float>(rng.Uniform());
    store.Add(i, f);
    set.image_ids.push_back(i);
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<data::TokenId> cap{1};
      for (int w = 0; w < 3; ++w) cap.push_back(static_cast<data::TokenId>(4 + rng.Index(16)));
      cap.push_back(2);
      set.captions.push_back(cap);
      set.caption_text.push_back("");
      set.column_owner.push_back(i);
    }
  }
  const auto parts = eval::SplitFolds(set, 5);
  bool ok = parts.size() == 5;
  for (std::size_t f = 0; f < parts.size(); ++f) {
    ok = ok && parts[f].image_ids.size() == 1000 && parts[f].image_ids.front() == f * 1000 &&
         parts[f].captions.size() == 5000;
  }
  const auto folded = eval::EvaluateRetrievalFolds(params, hp, store, set, 5);
  eval::RetrievalMetrics sum;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto alone = eval::EvaluateRetrieval(eval::ScoreRetrievalSet(params, hp, store, parts[f]));
    ok = ok && alone == folded.folds[f];
    for (std::size_t j = 0; j < 3; ++j) {
      sum.image_to_text[j] += alone.image_to_text[j];
      sum.text_to_image[j] += alone.text_to_image[j];
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    ok = ok && folded.mean.image_to_text[j] == sum.image_to_text[j] / 5.0 &&
         folded.mean.text_to_image[j] == sum.text_to_image[j] / 5.0;
  }
  bool rejects = false;
  try {
    eval::SplitFolds(eval::RetrievalSet{std::vector<std::uint64_t>(4999), {}, {}, {}}, 5);
  } catch (const ContractError&) {
    rejects = true;
  }
  return {ok && rejects, fmt::format("5 folds of 1000 images; mean R@1 {:.2f}/{:.2f} equals fold "
                                     "average; 4999 images rejected: {}",
                                     folded.mean.image_to_text[0], folded.mean.text_to_image[0],
                                     rejects)};
}

Outcome MetricFixtures() {
  using eval::Words;
  const std::vector<eval::Sentence> cand{Words("a b c")};
  const std::vector<eval::ReferenceSet> refs{{Words("a b d")}};
  const double b2 = eval::Bleu(cand, refs, 2)[1];
  const std::vector<eval::Sentence> x{Words("the quick brown fox jumps")};
  const std::vector<eval::ReferenceSet> xr{{x[0]}};
  const auto self = eval::Bleu(x, xr, 4);
  const double m1 = eval::MeteorExact(Words("a b c d e"), std::vector<eval::Sentence>{Words("a b c d e")});
  const double m2 = eval::MeteorExact(Words("b a"), std::vector<eval::Sentence>{Words("a b")});
  const double m3 = eval::MeteorExact(Words("x y"), std::vector<eval::Sentence>{Words("a b")});
  const bool ok = std::abs(b2 - 0.5774) <= 1e-4 &&
                  std::all_of(self.begin(), self.end(), [](double v) { return v == 1.0; }) &&
                  std::abs(m1 - 0.996) <= 1e-3 && std::abs(m2 - 0.5) <= 1e-3 && m3 == 0.0;
  return {ok, fmt::format("BLEU@2 {:.4f}; bleu(x,x) {}; METEOR {:.3f} / {:.3f} / {:.3f}", b2,
                          fmt::join(self, ","), m1, m2, m3)};
}

Outcome AttentionReductions() {
  testing::Rng rng(404);
  double worst_single = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix region = UnitMat(rng, 1, 8);
    const Matrix words = UnitMat(rng, 1 + rng.Index(6), 8);
    double mean_cos = 0.0;
    for (const auto& w : words) mean_cos += testing::Cosine(w, region[0]);
    mean_cos /= static_cast<double>(words.size());
    worst_single = std::max(
        worst_single, std::abs(model::AttentionSimilarity(FromRows(region), FromRows(words)) - mean_cos));

    const Matrix regions = UnitMat(rng, 2 + rng.Index(10), 8);
    Graph<double> g;
    const auto nodes = model::AttentionSimilarity(g, g.Constant(FromRows(regions)),
                                                  g.Constant(FromRows(words)), {});
    const auto& w = g.value(nodes.weights);
    for (std::size_t t = 0; t < w.rows(); ++t) {
      double total = 0.0;
      for (std::size_t j = 0; j < w.cols(); ++j) total += w.at(t, j);
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }
  const Matrix same = UnitMat(rng, 1, 8);
  const double identical = model::AttentionSimilarity(FromRows(same), FromRows(same));
  const bool ok = worst_single <= 1e-6 && worst_sum <= 1e-6 && std::abs(identical - 1.0) <= 1e-6;
  return {ok, fmt::format("N=1 max deviation {:.2e}; weight-sum deviation {:.2e}; identical "
                          "pair s = {:.9f}",
                          worst_single, worst_sum, identical)};
}

struct ToyTraining {
  data::FeatureStore store{1, 1};
  std::vector<data::Sample> samples;
  std::size_t vocab_size = 0;
};

ToyTraining LoadToyTraining() {
  ToyTraining t;
  t.store = data::ReadFeatureFile(testing::TestDataPath("toy.sttf"));
  const auto images = data::GroupByImage(data::ReadCaptionFile(testing::TestDataPath("toy.jsonl")));
  std::vector<std::string> corpus;
  for (const auto& im : images) corpus.insert(corpus.end(), im.captions.begin(), im.captions.end());
  const auto vocab = data::Vocabulary::Build(corpus, 1);
  t.samples = data::BuildSamples(images, vocab);
  t.vocab_size = vocab.size();
  return t;
}

Outcome DeterminismAndPersistence() {
  const ToyTraining toy = LoadToyTraining();
  model::HyperParams hp = model::HyperParams::Toy();
  hp.epochs = 4;
  train::TrainOptions ten;
  ten.max_iterations = 10;
  const auto a = train::Train(hp, toy.store, toy.samples, toy.vocab_size, ten);
  const auto b = train::Train(hp, toy.store, toy.samples, toy.vocab_size, ten);
  const bool same = a.log.size() == 10 && a.log == b.log;

  const auto full = train::Train(hp, toy.store, toy.samples, toy.vocab_size);
  testing::TempDir dir("acceptance_resume");
  model::HyperParams head_hp = hp;
  head_hp.epochs = 2;
  train::TrainOptions save;
  save.out_dir = dir.path();
  const auto head = train::Train(head_hp, toy.store, toy.samples, toy.vocab_size, save);
  train::TrainOptions resume;
  resume.resume = train::LoadCheckpoint(dir / "checkpoint_epoch_2.sttc");
  const auto tail = train::Train(hp, toy.store, toy.samples, toy.vocab_size, resume);
  std::vector<train::LogEntry> joined = head.log;
  joined.insert(joined.end(), tail.log.begin(), tail.log.end());
  const bool resumed = joined == full.log &&
                       train::EncodeCheckpoint(tail.checkpoint) ==
                           train::EncodeCheckpoint(full.checkpoint);
  return {same && resumed,
          fmt::format("10-step logs identical: {}; resume from epoch 2 reproduces {} log "
                      "entries and final weights: {}",
                      same, full.log.size(), resumed)};
}

Outcome WeightSharing() {
  const ToyTraining toy = LoadToyTraining();
  model::HyperParams hp = model::HyperParams::Toy();
  hp.lambda_rank = 0.0;
  hp.lambda_ic = 1.0;
  hp.lambda_sp = 0.0;
  auto params = model::ModelParams<float>::Initialize(hp, toy.store.dim(), toy.vocab_size, 1);
  const auto batch = data::MakeBatches(toy.samples, toy.store, hp.batch_size, 0, 0).front();
  const auto before = params;
  auto adam = train::AdamState::ZerosLike(params.Named());
  train::TrainStep(params, adam, batch, hp);

  // Decoder tensors read by the paraphrase path after the step.
  Graph<float> g;
  const auto nodes = model::BindConstants(g, params);
  train::BuildLoss(g, nodes, batch, hp);
  bool changed = true, identical = true;
  std::size_t count = 0;
  const std::vector<std::pair<NodeId, const Tensor<float>*>> decoder{
      {nodes.decoder_w, &params.decoder_w}, {nodes.decoder_b, &params.decoder_b},
      {nodes.output_w, &params.output_w},   {nodes.output_b, &params.output_b},
      {nodes.init_h_w, &params.init_h_w},   {nodes.init_c_w, &params.init_c_w}};
  const std::vector<const Tensor<float>*> old{&before.decoder_w, &before.decoder_b,
                                              &before.output_w,  &before.output_b,
                                              &before.init_h_w,  &before.init_c_w};
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    identical = identical && g.value(decoder[i].first) == *decoder[i].second;
    changed = changed && !(*decoder[i].second == *old[i]);
    ++count;
  }
  const bool encoder_untouched = params.encoder_w == before.encoder_w;
  return {changed && identical && encoder_untouched,
          fmt::format("{} decoder tensors updated by the captioning step and read unchanged by "
                      "the paraphrase path; sentence encoder untouched: {}",
                      count, encoder_untouched)};
}

}  // namespace
}  // namespace stt

int main() {
  struct Criterion {
    const char* name;
    std::function<stt::Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient-verification", stt::GradientVerification},
      {"toy-overfit", stt::ToyOverfit},
      {"ranking-loss-oracle", stt::RankingOracle},
      {"paraphrase-protocol", stt::ParaphraseProtocol},
      {"retrieval-oracle", stt::RetrievalOracle},
      {"five-fold-protocol", stt::FiveFold},
      {"metric-fixtures", stt::MetricFixtures},
      {"attention-reductions", stt::AttentionReductions},
      {"determinism-and-persistence", stt::DeterminismAndPersistence},
      {"weight-sharing", stt::WeightSharing},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    stt::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", c.name, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
