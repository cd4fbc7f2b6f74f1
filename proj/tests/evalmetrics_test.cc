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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "stt/error.h"
#include "stt/report.h"
#include "stt/retrieval.h"
#include "stt/tasks.h"
#include "stt/text_metrics.h"

namespace stt::eval {
namespace {

using testing::Matrix;

SimilarityMatrix FromMatrix(const Matrix& m, std::vector<std::size_t> owner) {
  std::vector<double> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  return SimilarityMatrix(m.size(), std::move(flat), std::move(owner));
}

std::vector<std::size_t> Diagonal(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), 0);
  return o;
}

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

// ---- similarity matrices ----

TEST(SimilarityMatrixTest, IdenticalSetsHaveUnitDiagonal) {
  testing::Rng rng(1);
  const Matrix e = UnitMat(rng, 4, 6);
  const auto sim = GlobalSimilarityMatrix(FromRows(e), FromRows(e), Diagonal(4));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sim.at(i, i), 1.0, 1e-12);
}

TEST(SimilarityMatrixTest, GlobalEntriesArePairwiseCosines) {
  testing::Rng rng(2);
  const Matrix a = UnitMat(rng, 3, 5);
  const Matrix b = UnitMat(rng, 3, 5);
  const auto sim = GlobalSimilarityMatrix(FromRows(a), FromRows(b), Diagonal(3));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(sim.at(i, j), testing::Cosine(a[i], b[j]), 1e-12);
    }
  }
}

TEST(SimilarityMatrixTest, AttentionEntriesMatchStraightLineOracle) {
  testing::Rng rng(3);
  std::vector<Tensor<double>> regions, words;
  std::vector<Matrix> rm, wm;
  for (int i = 0; i < 3; ++i) {
    rm.push_back(UnitMat(rng, 4, 5));
    regions.push_back(FromRows(rm.back()));
    wm.push_back(UnitMat(rng, 2 + i, 5));
    words.push_back(FromRows(wm.back()));
  }
  const auto sim = AttentionSimilarityMatrix(regions, words, Diagonal(3), {});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(sim.at(i, c), testing::StraightLineAttention(rm[i], wm[c], 9.0).score, 1e-12);
    }
  }
}

TEST(SimilarityMatrixTest, ContractChecks) {
  EXPECT_THROW(SimilarityMatrix(2, {1, 2, 3}, {0, 1}), DimensionError);
  EXPECT_THROW(SimilarityMatrix(2, {1, 2, 3, 4}, {0, 2}), ContractError);
  EXPECT_THROW(SimilarityMatrix(2, {1, 2, 3, 4}, {0, 0}), ContractError);
  EXPECT_THROW(SimilarityMatrix(1, {NAN}, {0}), ContractError);
  EXPECT_THROW(GlobalSimilarityMatrix(Tensor<double>({2, 3}, 0.1), Tensor<double>({2, 4}, 0.1),
                                      Diagonal(2)),
               DimensionError);
}

TEST(SimilarityMatrixTest, RestrictKeepsOwnColumns) {
  const auto sim = FromMatrix({{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}, {11, 12, 13, 14, 15}},
                              {0, 1, 1, 2, 0});
  const auto sub = sim.Restrict(1, 3);
  EXPECT_EQ(sub.images(), 2u);
  ASSERT_EQ(sub.captions(), 3u);
  EXPECT_EQ(std::vector<std::size_t>(sub.column_owner().begin(), sub.column_owner().end()),
            (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(sub.at(0, 0), 7);
  EXPECT_EQ(sub.at(1, 2), 14);
  EXPECT_EQ(sim.GroundTruth()[0], (std::vector<std::size_t>{0, 4}));
}

// ---- recall ----

TEST(RecallTest, HandCheckedThreeByThree) {
  const auto sim = FromMatrix({{0.9, 0.1, 0.2}, {0.3, 0.2, 0.8}, {0.1, 0.7, 0.6}}, Diagonal(3));
  EXPECT_NEAR(RecallAtK(sim, Direction::kImageToText, 1), 33.33, 0.01);
  EXPECT_EQ(RecallAtK(sim, Direction::kImageToText, 3), 100.0);
}

TEST(RecallTest, DiagonalDominantIsPerfect) {
  const auto sim = FromMatrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, Diagonal(3));
  EXPECT_EQ(RecallAtK(sim, Direction::kImageToText, 1), 100.0);
  EXPECT_EQ(RecallAtK(sim, Direction::kTextToImage, 1), 100.0);
}

TEST(RecallTest, TiesGoToTheLowerIndex) {
  const auto sim = FromMatrix({{0.5, 0.5}, {0.5, 0.5}}, Diagonal(2));
  EXPECT_EQ(RecallAtK(sim, Direction::kImageToText, 1), 50.0);
  EXPECT_EQ(RecallAtK(sim, Direction::kTextToImage, 1), 50.0);
}

TEST(RecallTest, KOutOfRange) {
  const auto sim = FromMatrix({{1, 0}, {0, 1}}, Diagonal(2));
  EXPECT_THROW(RecallAtK(sim, Direction::kImageToText, 0), ContractError);
  EXPECT_THROW(RecallAtK(sim, Direction::kImageToText, 3), ContractError);
}

TEST(RecallTest, MatchesFullSortOracleOnRandomMatrices) {
  testing::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t images = 50;
    const std::size_t captions = trial % 2 == 0 ? 50 : 50 + 1 + rng.Index(100);
    const auto owner = testing::RandomOwners(rng, images, captions);
    Matrix s = rng.Mat(images, captions);
    // Coarse values so ties occur.
    if (trial % 4 == 0) {
      for (auto& r : s) {
        for (double& x : r) x = std::round(x * 4) / 4;
      }
    }
    const auto sim = FromMatrix(s, owner);
    double prev_i2t = 0, prev_t2i = 0;
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}, images}) {
      const double i2t = RecallAtK(sim, Direction::kImageToText, k == images ? captions : k);
      const double t2i = RecallAtK(sim, Direction::kTextToImage, k);
      ASSERT_NEAR(i2t, testing::BruteForceRecall(s, owner, true, k == images ? captions : k), 1e-9)
          << trial << " " << k;
      ASSERT_NEAR(t2i, testing::BruteForceRecall(s, owner, false, k), 1e-9) << trial << " " << k;
      EXPECT_GE(i2t, prev_i2t);
      EXPECT_GE(t2i, prev_t2i);
      prev_i2t = i2t;
      prev_t2i = t2i;
    }
    EXPECT_EQ(prev_i2t, 100.0);
    EXPECT_EQ(prev_t2i, 100.0);
  }
}

TEST(RecallTest, EvaluateRetrievalClampsK) {
  const auto sim = FromMatrix({{0.9, 0.1, 0.2}, {0.3, 0.2, 0.8}, {0.1, 0.7, 0.6}}, Diagonal(3));
  const auto m = EvaluateRetrieval(sim);
  EXPECT_NEAR(m.image_to_text[0], 100.0 / 3.0, 1e-9);
  EXPECT_EQ(m.image_to_text[1], 100.0);
  EXPECT_EQ(m.image_to_text[2], 100.0);
}

// ---- folds ----

TEST(FoldTest, MeanOfFoldValues) {
  std::vector<RetrievalMetrics> folds(5);
  for (int f = 0; f < 5; ++f) folds[f].image_to_text[0] = 10.0 * (f + 1);
  EXPECT_EQ(MeanMetrics(folds).image_to_text[0], 30.0);
  std::vector<RetrievalMetrics> same(3, folds[1]);
  EXPECT_EQ(MeanMetrics(same), folds[1]);
}

TEST(FoldTest, MatrixFoldsAreIndependentRestrictions) {
  testing::Rng rng(5);
  const std::size_t images = 40;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < images; ++i) {
    for (std::size_t c = 0; c < 1 + i % 3; ++c) owner.push_back(i);
  }
  const Matrix s = rng.Mat(images, owner.size());
  const auto folded = EvaluateFolds(FromMatrix(s, owner), 4);
  ASSERT_EQ(folded.folds.size(), 4u);
  RetrievalMetrics sum;
  for (std::size_t f = 0; f < 4; ++f) {
    Matrix sub;
    std::vector<std::size_t> sub_owner;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < owner.size(); ++c) {
      if (owner[c] / 10 == f) {
        cols.push_back(c);
        sub_owner.push_back(owner[c] - f * 10);
      }
    }
    for (std::size_t i = f * 10; i < (f + 1) * 10; ++i) {
      std::vector<double> row;
      for (std::size_t c : cols) row.push_back(s[i][c]);
      sub.push_back(row);
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t k = std::min(kRecallKs[j], cols.size());
      const std::size_t ki = std::min(kRecallKs[j], std::size_t{10});
      EXPECT_EQ(folded.folds[f].image_to_text[j], testing::BruteForceRecall(sub, sub_owner, true, k));
      EXPECT_EQ(folded.folds[f].text_to_image[j], testing::BruteForceRecall(sub, sub_owner, false, ki));
      sum.image_to_text[j] += folded.folds[f].image_to_text[j];
      sum.text_to_image[j] += folded.folds[f].text_to_image[j];
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(folded.mean.image_to_text[j], sum.image_to_text[j] / 4.0);
    EXPECT_EQ(folded.mean.text_to_image[j], sum.text_to_image[j] / 4.0);
  }
  EXPECT_THROW(EvaluateFolds(FromMatrix(s, owner), 3), ContractError);
}

RetrievalSet SyntheticSet(std::size_t images, std::size_t per_image) {
  RetrievalSet set;
  for (std::size_t i = 0; i < images; ++i) {
    set.image_ids.push_back(1000 + i);
    for (std::size_t c = 0; c < per_image; ++c) {
      set.caption_text.push_back(std::to_string(i) + "/" + std::to_string(c));
      set.captions.push_back({1, static_cast<data::TokenId>(4 + (i + c) % 6), 2});
      set.column_owner.push_back(i);
    }
  }
  return set;
}

TEST(FoldTest, FiveThousandImagesSplitIntoThousands) {
  const auto set = SyntheticSet(5000, 5);
  const auto folds = SplitFolds(set, 5);
  ASSERT_EQ(folds.size(), 5u);
  for (std::size_t f = 0; f < 5; ++f) {
    ASSERT_EQ(folds[f].image_ids.size(), 1000u);
    EXPECT_EQ(folds[f].image_ids.front(), 1000 + f * 1000);
    EXPECT_EQ(folds[f].captions.size(), 5000u);
    EXPECT_EQ(folds[f].caption_text.front(), std::to_string(f * 1000) + "/0");
    EXPECT_EQ(folds[f].column_owner.back(), 999u);
  }
  EXPECT_THROW(SplitFolds(SyntheticSet(4999, 1), 5), ContractError);
  EXPECT_THROW(SplitFolds(set, 0), ContractError);
}

TEST(FoldTest, ScoredFoldsAverageExactly) {
  model::HyperParams hp;
  hp.cvs_dim = 6;
  hp.word_dim = 4;
  hp.hidden_dim = 5;
  const auto params = EvalParams::Initialize(hp, 3, 10, 2);
  testing::Rng rng(6);
  data::FeatureStore store(1, 3);
  const auto set = SyntheticSet(500, 2);
  for (auto id : set.image_ids) {
    store.Add(id, {static_cast<float>(rng.Uniform()), static_cast<float>(rng.Uniform()),
                   static_cast<float>(rng.Uniform())});
  }
  const auto folded = EvaluateRetrievalFolds(params, hp, store, set, 5);
  ASSERT_EQ(folded.folds.size(), 5u);
  const auto parts = SplitFolds(set, 5);
  RetrievalMetrics sum;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto alone = EvaluateRetrieval(ScoreRetrievalSet(params, hp, store, parts[f]));
    EXPECT_EQ(folded.folds[f], alone);
    for (std::size_t j = 0; j < 3; ++j) {
      sum.image_to_text[j] += alone.image_to_text[j];
      sum.text_to_image[j] += alone.text_to_image[j];
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(folded.mean.image_to_text[j], sum.image_to_text[j] / 5.0);
    EXPECT_EQ(folded.mean.text_to_image[j], sum.text_to_image[j] / 5.0);
  }
}

// ---- BLEU ----

// Straightforward corpus BLEU written independently of the library.
std::vector<double> OracleBleu(const std::vector<Sentence>& cands,
                               const std::vector<ReferenceSet>& refs, std::size_t max_n) {
  std::vector<double> matched(max_n, 0), total(max_n, 0);
  double c = 0, r = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    const auto& cand = cands[s];
    c += static_cast<double>(cand.size());
    std::size_t best = refs[s][0].size();
    for (const auto& ref : refs[s]) {
      const auto d = [&](std::size_t len) {
        return std::abs(static_cast<long>(len) - static_cast<long>(cand.size()));
      };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) {
        best = ref.size();
      }
    }
    r += static_cast<double>(best);
    for (std::size_t n = 1; n <= max_n; ++n) {
      std::map<Sentence, int> counts;
      for (std::size_t i = 0; i + n <= cand.size(); ++i) {
        ++counts[Sentence(cand.begin() + i, cand.begin() + i + n)];
      }
      for (const auto& [gram, count] : counts) {
        int max_ref = 0;
        for (const auto& ref : refs[s]) {
          int in_ref = 0;
          for (std::size_t i = 0; i + n <= ref.size(); ++i) {
            in_ref += Sentence(ref.begin() + i, ref.begin() + i + n) == gram;
          }
          max_ref = std::max(max_ref, in_ref);
        }
        matched[n - 1] += std::min(count, max_ref);
        total[n - 1] += count;
      }
    }
  }
  std::vector<double> out;
  const double bp = c == 0 ? 0.0 : (c < r ? std::exp(1.0 - r / c) : 1.0);
  double log_sum = 0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0 || total[n - 1] == 0) {
      out.push_back(0.0);
      log_sum = -INFINITY;
      continue;
    }
    log_sum += std::log(matched[n - 1] / total[n - 1]);
    out.push_back(bp * std::exp(log_sum / static_cast<double>(n)));
  }
  return out;
}

TEST(BleuTest, HandFixture) {
  const std::vector<Sentence> cand{Words("a b c")};
  const std::vector<ReferenceSet> refs{{Words("a b d")}};
  const auto b = Bleu(cand, refs, 2);
  EXPECT_NEAR(b[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(b[1], 0.5774, 1e-4);
}

TEST(BleuTest, IdenticalIsOneAndDisjointIsZero) {
  const std::vector<Sentence> cand{Words("the cat sat on the mat"), Words("a dog runs fast now")};
  const std::vector<ReferenceSet> same{{cand[0]}, {cand[1]}};
  for (double x : Bleu(cand, same)) EXPECT_NEAR(x, 1.0, 1e-12);
  const std::vector<ReferenceSet> other{{Words("x y z w")}, {Words("p q r s")}};
  for (double x : Bleu(cand, other)) EXPECT_EQ(x, 0.0);
}

TEST(BleuTest, BrevityPenalty) {
  const std::vector<Sentence> cand{Words("a b")};
  const std::vector<ReferenceSet> refs{{Words("a b c d")}};
  EXPECT_NEAR(Bleu(cand, refs, 1)[0], std::exp(1.0 - 2.0), 1e-12);
}

TEST(BleuTest, Errors) {
  const std::vector<Sentence> none;
  const std::vector<ReferenceSet> no_refs;
  EXPECT_THROW(Bleu(none, no_refs), ContractError);
  const std::vector<Sentence> one{Words("a")};
  const std::vector<ReferenceSet> two{{Words("a")}, {Words("b")}};
  EXPECT_THROW(Bleu(one, two), DimensionError);
  const std::vector<ReferenceSet> ok{{Words("a")}};
  EXPECT_THROW(Bleu(one, ok, 5), ContractError);
  EXPECT_THROW(Bleu(one, ok, 0), ContractError);
  const std::vector<ReferenceSet> empty_set{{}};
  EXPECT_THROW(Bleu(one, empty_set), ContractError);
}

std::vector<Sentence> RandomCorpus(testing::Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<Sentence> out(n);
  for (auto& s : out) {
    const std::size_t len = 1 + rng.Index(9);
    for (std::size_t i = 0; i < len; ++i) s.push_back("w" + std::to_string(rng.Index(vocab)));
  }
  return out;
}

TEST(BleuTest, MatchesOracleAndStaysInRange) {
  testing::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.Index(6);
    const auto cands = RandomCorpus(rng, n, 4);
    std::vector<ReferenceSet> refs(n);
    for (auto& r : refs) r = RandomCorpus(rng, 1 + rng.Index(3), 4);
    const auto got = Bleu(cands, refs, 4);
    const auto want = OracleBleu(cands, refs, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(got[k], want[k], 1e-12) << trial << " n=" << k + 1;
      EXPECT_GE(got[k], 0.0);
      EXPECT_LE(got[k], 1.0);
    }
  }
}

TEST(BleuTest, RemovingAMatchedWordNeverHelps) {
  testing::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Sentence ref = RandomCorpus(rng, 1, 5)[0];
    Sentence cand = ref;
    const std::vector<Sentence> full{cand};
    const std::vector<ReferenceSet> refs{{ref}};
    const double before = Bleu(full, refs, 1)[0];
    if (cand.size() < 2) continue;
    cand.erase(cand.begin() + static_cast<long>(rng.Index(cand.size())));
    const std::vector<Sentence> shorter{cand};
    EXPECT_LE(Bleu(shorter, refs, 1)[0], before + 1e-12);
  }
}

// ---- METEOR ----

TEST(MeteorTest, Fixtures) {
  EXPECT_NEAR(MeteorExact(Words("a b c d e"), std::vector<Sentence>{Words("a b c d e")}), 0.996,
              1e-3);
  const auto swapped = MeteorAlign(Words("b a"), Words("a b"));
  EXPECT_EQ(swapped.matches, 2u);
  EXPECT_EQ(swapped.chunks, 2u);
  EXPECT_NEAR(swapped.penalty, 0.5, 1e-12);
  EXPECT_NEAR(swapped.score, 0.5, 1e-3);
  EXPECT_EQ(MeteorExact(Words("x y"), std::vector<Sentence>{Words("a b")}), 0.0);
}

TEST(MeteorTest, FMeanWeighsRecall) {
  // P = 1, R = 1/2: F = 10 * 0.5 / (0.5 + 9) and one chunk of two matches.
  const auto a = MeteorAlign(Words("a b"), Words("a b c d"));
  EXPECT_NEAR(a.fmean, 5.0 / 9.5, 1e-12);
  EXPECT_NEAR(a.score, 5.0 / 9.5 * (1.0 - 0.5 / 8.0), 1e-12);
}

TEST(MeteorTest, BestReferenceAndOrderInvariance) {
  testing::Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Sentence cand = RandomCorpus(rng, 1, 5)[0];
    std::vector<Sentence> refs = RandomCorpus(rng, 1 + rng.Index(4), 5);
    const double score = MeteorExact(cand, refs);
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
    double best = 0.0;
    for (const auto& r : refs) best = std::max(best, MeteorAlign(cand, r).score);
    EXPECT_EQ(score, best);
    std::reverse(refs.begin(), refs.end());
    EXPECT_EQ(MeteorExact(cand, refs), score);
  }
}

TEST(MeteorTest, EmptyInputs) {
  const std::vector<Sentence> refs{Words("a")};
  EXPECT_THROW(MeteorExact(Sentence{}, refs), ContractError);
  EXPECT_THROW(MeteorExact(Words("a"), std::vector<Sentence>{}), ContractError);
  EXPECT_THROW(MeteorExact(Words("a"), std::vector<Sentence>{Sentence{}}), ContractError);
}

// ---- task harnesses ----

struct TinyTask {
  model::HyperParams hp;
  data::Vocabulary vocab;
  data::FeatureStore store{1, 4};
  std::vector<data::ImageCaptions> images;
  EvalParams params;
};

TinyTask MakeTinyTask() {
  TinyTask t;
  t.hp.cvs_dim = 6;
  t.hp.word_dim = 4;
  t.hp.hidden_dim = 5;
  t.hp.max_decode_len = 6;
  t.images = {{1, {"a red cat", "the red cat", "one red cat"}},
              {2, {"a blue dog", "the blue dog"}},
              {3, {"a green bird"}}};
  std::vector<std::string> corpus;
  for (const auto& im : t.images) corpus.insert(corpus.end(), im.captions.begin(), im.captions.end());
  t.vocab = data::Vocabulary::Build(corpus, 1);
  testing::Rng rng(10);
  for (const auto& im : t.images) {
    std::vector<float> f(4);
    for (float& x : f) x = static_cast<float>(rng.Uniform());
    t.store.Add(im.image_id, f);
  }
  t.params = EvalParams::Initialize(t.hp, 4, t.vocab.size(), 3);
  return t;
}

TEST(TaskTest, EmptyDecodesScoreZeroAndComplete) {
  TinyTask t = MakeTinyTask();
  t.params.output_b[data::Vocabulary::kEnd] = 100.0;
  const auto caption = EvalCaptionTask(t.params, t.hp, t.vocab, t.store, t.images);
  EXPECT_EQ(caption.scores.count, 3u);
  EXPECT_EQ(caption.scores.meteor, 0.0);
  for (double b : caption.scores.bleu) EXPECT_EQ(b, 0.0);
  for (const auto& s : caption.samples) EXPECT_TRUE(s.hypothesis.empty());
}

TEST(TaskTest, ParaphraseQueriesExcludeThemselves) {
  const TinyTask t = MakeTinyTask();
  const auto para = EvalParaphraseTask(t.params, t.hp, t.vocab, t.images);
  EXPECT_EQ(para.samples.size(), 5u);  // image 3 has a single caption
  for (const auto& s : para.samples) {
    EXPECT_NE(s.image_id, 3u);
    EXPECT_EQ(std::count(s.references.begin(), s.references.end(), s.query), 0);
    EXPECT_EQ(s.references.size(), s.image_id == 1 ? 2u : 1u);
  }
}

TEST(TaskTest, CaptionTaskUsesEveryReference) {
  const TinyTask t = MakeTinyTask();
  const auto caption = EvalCaptionTask(t.params, t.hp, t.vocab, t.store, t.images);
  ASSERT_EQ(caption.samples.size(), 3u);
  EXPECT_EQ(caption.samples[0].references.size(), 3u);
  EXPECT_TRUE(caption.samples[0].query.empty());
  std::vector<Sentence> hyps;
  std::vector<ReferenceSet> refs;
  for (const auto& s : caption.samples) {
    hyps.push_back(Words(s.hypothesis));
    ReferenceSet r;
    for (const auto& ref : s.references) r.push_back(data::SplitWords(ref));
    refs.push_back(r);
  }
  const auto direct = ScoreCaptions(hyps, refs);
  EXPECT_EQ(direct.bleu, caption.scores.bleu);
  EXPECT_EQ(direct.meteor, caption.scores.meteor);
}

TEST(TaskTest, MissingFeaturesNameTheImage) {
  TinyTask t = MakeTinyTask();
  t.images.push_back({99, {"a cat"}});
  try {
    EvalCaptionTask(t.params, t.hp, t.vocab, t.store, t.images);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
  }
}

TEST(TaskTest, RetrievalSetSkipsWordlessCaptions) {
  const TinyTask t = MakeTinyTask();
  std::vector<data::ImageCaptions> images = t.images;
  images[1].captions.push_back("...");
  images.push_back({4, {"!!"}});
  std::vector<std::string> warnings;
  const auto set = MakeRetrievalSet(images, t.vocab, &warnings);
  EXPECT_EQ(set.image_ids.size(), 3u);
  EXPECT_EQ(set.captions.size(), 6u);
  EXPECT_EQ(warnings.size(), 3u);  // two captions, then image 4 itself
  const auto sim = ScoreRetrievalSet(t.params, t.hp, t.store, set);
  EXPECT_EQ(sim.images(), 3u);
  EXPECT_EQ(sim.captions(), 6u);
}

// ---- reports ----

TEST(ReportTest, TextReportHasTableColumns) {
  CaptionScores scores;
  scores.bleu = {0.7, 0.5, 0.3, 0.2};
  scores.meteor = 0.25;
  scores.count = 12;
  const auto j = ToJson(TextReport("caption", scores));
  for (const char* key : {"B@1", "B@2", "B@3", "B@4", "METEOR"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["task"], "caption");
  EXPECT_EQ(j["B@3"], 0.3);
  EXPECT_FALSE(j.contains("image_to_text"));
  const std::string table = FormatTable(TextReport("paraphrase", scores));
  EXPECT_NE(table.find("METEOR"), std::string::npos);
  EXPECT_NE(table.find("0.700"), std::string::npos);
}

TEST(ReportTest, RetrievalReportCarriesFolds) {
  FoldedRetrieval folded;
  folded.folds.resize(2);
  folded.folds[0].image_to_text = {10, 20, 30};
  folded.folds[1].image_to_text = {30, 40, 50};
  folded.mean = MeanMetrics(folded.folds);
  const auto j = ToJson(RetrievalReport(folded));
  EXPECT_EQ(j["folds"], 2);
  EXPECT_EQ(j["image_to_text"]["R@1"], 20.0);
  EXPECT_EQ(j["image_to_text"]["R@10"], 40.0);
  EXPECT_TRUE(j["text_to_image"].contains("R@5"));
  EXPECT_EQ(j["per_fold"].size(), 2u);
  const std::string table = FormatTable(RetrievalReport(folded));
  EXPECT_NE(table.find("caption retrieval"), std::string::npos);
  EXPECT_NE(table.find("image retrieval"), std::string::npos);
}

TEST(ReportTest, WritesJsonAndTable) {
  testing::TempDir dir("report");
  CaptionScores scores;
  scores.count = 1;
  WriteReport(TextReport("caption", scores), dir / "caption.json");
  EXPECT_TRUE(std::filesystem::exists(dir / "caption.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "caption.txt"));
}

}  // namespace
}  // namespace stt::eval
