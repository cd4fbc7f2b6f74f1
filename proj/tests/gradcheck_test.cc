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

#include <string>

#include <gtest/gtest.h>

#include "stt/gradcheck.h"
#include "stt/hyperparams.h"
#include "stt/trainer.h"

namespace stt {
namespace {

TEST(GradCheckTest, TanhVector) {
  const std::vector<Shape> shapes{{4}};
  EXPECT_TRUE(GradCheck(OpKind::kTanh, shapes, 1e-6).pass);
}

TEST(GradCheckTest, MatMulTwoByThree) {
  const std::vector<Shape> shapes{{2, 3}, {3, 2}};
  EXPECT_TRUE(GradCheck(OpKind::kMatMul, shapes, 1e-6).pass);
}

TEST(GradCheckTest, ZeroToleranceAlwaysFails) {
  const std::vector<Shape> shapes{{4}};
  const auto report = GradCheck(OpKind::kTanh, shapes, 0.0);
  EXPECT_FALSE(report.pass);
  EXPECT_GT(report.max_rel_err, 0.0);
}

TEST(GradCheckTest, DetectsAWrongGradient) {
  // The x*x term is folded into a constant, so reverse mode misses its
  // gradient while the finite difference sees it.
  const GraphFunction broken = [](Graph<double>& g, std::span<const NodeId> in) {
    const Tensor<double>& x = g.value(in[0]);
    Tensor<double> shifted(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] * x[i];
    return g.Sum(g.Add(in[0], g.Constant(shifted)));
  };
  const std::vector<Tensor<double>> inputs{Tensor<double>({3}, {0.3, -0.7, 1.1})};
  EXPECT_FALSE(GradCheckFunction("broken", broken, inputs, 1e-6).pass);
}

class OpKindGradCheck : public ::testing::TestWithParam<OpKind> {};

TEST_P(OpKindGradCheck, TwentySeededInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto report = GradCheck(GetParam(), {}, 1e-6, seed);
    EXPECT_TRUE(report.pass) << "seed " << seed << " rel err " << report.max_rel_err;
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, OpKindGradCheck, ::testing::ValuesIn(AllOpKinds()),
                         [](const auto& info) { return std::string(OpKindName(info.param)); });

struct LossCase {
  train::LossTerm term;
  model::NegativeMode negatives;
};

void PrintTo(const LossCase& c, std::ostream* os) {
  *os << train::ToString(c.term) << "/" << model::ToString(c.negatives);
}

class LossGradCheck : public ::testing::TestWithParam<LossCase> {};

TEST_P(LossGradCheck, GlobalModeTwentySeeds) {
  const auto [term, negatives] = GetParam();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto report =
        train::GradCheckLoss(term, model::SimilarityMode::kGlobal, negatives, seed, 1e-5);
    EXPECT_TRUE(report.pass) << "seed " << seed << " rel err " << report.max_rel_err;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Losses, LossGradCheck,
    ::testing::Values(LossCase{train::LossTerm::kRank, model::NegativeMode::kSum},
                      LossCase{train::LossTerm::kRank, model::NegativeMode::kHardest},
                      LossCase{train::LossTerm::kCaption, model::NegativeMode::kSum},
                      LossCase{train::LossTerm::kParaphrase, model::NegativeMode::kSum}),
    [](const auto& info) {
      return std::string(train::ToString(info.param.term)).substr(2) +
             (info.param.negatives == model::NegativeMode::kSum ? "_sum" : "_hardest");
    });

// The attention score clamps cosines at zero and divides by a row maximum,
// so it is only piecewise smooth. A seed whose point lies within a few
// steps of a kink fails at one step size and passes at a smaller one; a
// wrong gradient fails at both.
TEST(AttentionLossGradCheck, PassesAwayFromKinks) {
  for (auto term : {train::LossTerm::kRank, train::LossTerm::kCaption,
                    train::LossTerm::kParaphrase}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto report = train::GradCheckLoss(term, model::SimilarityMode::kAttention,
                                         model::NegativeMode::kSum, seed, 1e-5);
      if (!report.pass) {
        report = train::GradCheckLoss(term, model::SimilarityMode::kAttention,
                                      model::NegativeMode::kSum, seed, 1e-5,
                                      kFiniteDifferenceStep / 8.0);
      }
      EXPECT_TRUE(report.pass) << train::ToString(term) << " seed " << seed << " rel err "
                               << report.max_rel_err;
    }
  }
}

}  // namespace
}  // namespace stt
