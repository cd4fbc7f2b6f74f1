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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "stt/error.h"
#include "stt/gradcheck.h"
#include "stt/graph.h"

namespace stt {
namespace {

using G = Graph<double>;
using T = Tensor<double>;

TEST(GraphForwardTest, MatMulByIdentity) {
  G g;
  const NodeId a = g.Constant(T({2, 2}, {1, 2, 3, 4}));
  const NodeId eye = g.Constant(T({2, 2}, {1, 0, 0, 1}));
  EXPECT_EQ(g.value(g.MatMul(a, eye)).values(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(GraphForwardTest, SoftmaxOfEqualLogitsIsUniform) {
  G g;
  const auto& p = g.value(g.Softmax(g.Constant(T({2}, {0, 0}))));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(GraphForwardTest, TanhHalf) {
  G g;
  EXPECT_NEAR(g.value(g.Tanh(g.Constant(T({1}, {0.5})))).item(), 0.46211715726000974, 1e-15);
}

TEST(GraphForwardTest, SoftmaxRowsAreDistributions) {
  testing::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.Index(4), cols = 1 + rng.Index(7);
    G g;
    const auto& p = g.value(g.Softmax(g.Constant(T({rows, cols}, rng.Vector(rows * cols, -20, 20)))));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        EXPECT_GE(p.at(r, c), 0.0);
        sum += p.at(r, c);
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(GraphForwardTest, LogSoftmaxMatchesLogOfSoftmax) {
  G g;
  const NodeId x = g.Constant(T({2, 3}, {1, 2, 3, -1, 0, 400}));
  const auto& ls = g.value(g.LogSoftmax(x));
  const auto& s = g.value(g.Softmax(x));
  for (std::size_t i = 0; i < 6; ++i) {
    if (s[i] > 1e-300) EXPECT_NEAR(ls[i], std::log(s[i]), 1e-12);
  }
}

TEST(GraphForwardTest, RowBroadcastOfRightOperand) {
  G g;
  const NodeId a = g.Constant(T({2, 2}, {1, 2, 3, 4}));
  const NodeId b = g.Constant(T({2}, {10, 20}));
  EXPECT_EQ(g.value(g.Add(a, b)).values(), (std::vector<double>{11, 22, 13, 24}));
  const NodeId row = g.Constant(T({1, 2}, {2, 4}));
  EXPECT_EQ(g.value(g.Div(a, row)).values(), (std::vector<double>{0.5, 0.5, 1.5, 1.0}));
}

TEST(GraphForwardTest, ShapeMismatchNamesOpAndShapes) {
  G g;
  const NodeId a = g.Constant(T({2, 3}));
  const NodeId b = g.Constant(T({2, 3}));
  try {
    g.MatMul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("matmul"), std::string::npos) << what;
    EXPECT_NE(what.find("[2x3]"), std::string::npos) << what;
  }
  EXPECT_THROW(g.Add(a, g.Constant(T({3, 2}))), DimensionError);
}

TEST(GraphForwardTest, SliceConcatTransposeReshape) {
  G g;
  const NodeId a = g.Constant(T({2, 3}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(g.value(g.Slice(a, 1, 1, 2)).values(), (std::vector<double>{2, 3, 5, 6}));
  EXPECT_EQ(g.value(g.Slice(a, 0, 1, 1)).values(), (std::vector<double>{4, 5, 6}));
  const std::vector<NodeId> parts{a, a};
  EXPECT_EQ(g.value(g.Concat(parts, 0)).shape(), (Shape{4, 3}));
  EXPECT_EQ(g.value(g.Concat(parts, 1)).values(),
            (std::vector<double>{1, 2, 3, 1, 2, 3, 4, 5, 6, 4, 5, 6}));
  EXPECT_EQ(g.value(g.Transpose(a)).values(), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  EXPECT_EQ(g.value(g.Reshape(a, {3, 2})).shape(), (Shape{3, 2}));
}

TEST(GraphForwardTest, RowReductionsAndGather) {
  G g;
  const NodeId a = g.Constant(T({2, 3}, {1, 5, 3, -4, -2, -6}));
  EXPECT_EQ(g.value(g.SumLast(a)).values(), (std::vector<double>{9, -12}));
  EXPECT_EQ(g.value(g.MaxLast(a)).values(), (std::vector<double>{5, -2}));
  EXPECT_DOUBLE_EQ(g.value(g.Sum(a)).item(), -3.0);
  EXPECT_DOUBLE_EQ(g.value(g.Mean(a)).item(), -0.5);
  EXPECT_EQ(g.value(g.GatherRows(a, {1, 1, 0})).values(),
            (std::vector<double>{-4, -2, -6, -4, -2, -6, 1, 5, 3}));
  EXPECT_THROW(g.GatherRows(a, {2}), DimensionError);
}

TEST(GraphForwardTest, L2NormalizeRowsAndZeroRow) {
  G g;
  const auto& u = g.value(g.L2Normalize(g.Constant(T({1, 2}, {3, 4}))));
  EXPECT_NEAR(u[0], 0.6, 1e-12);
  EXPECT_NEAR(u[1], 0.8, 1e-12);
  EXPECT_THROW(g.L2Normalize(g.Constant(T({2, 2}, {1, 0, 0, 0}))), DegenerateInputError);
}

TEST(GraphForwardTest, CosineNode) {
  G g;
  const NodeId a = g.Constant(T({2}, {1, 1}));
  const NodeId b = g.Constant(T({2}, {1, 0}));
  EXPECT_NEAR(g.value(CosineSimilarity(g, a, b)).item(), 0.70710678118654752, 1e-12);
}

TEST(GraphBackwardTest, SumGivesOnes) {
  G g;
  const NodeId w = g.Input(T({2, 3}, {1, -2, 3, 0.5, 7, 9}));
  g.Backward(g.Sum(w));
  EXPECT_EQ(g.grad(w), std::vector<double>(6, 1.0));
}

TEST(GraphBackwardTest, MeanOfSquares) {
  G g;
  const NodeId w = g.Input(T({2}, {1, 2}));
  g.Backward(g.Mean(g.Mul(w, w)));
  EXPECT_EQ(g.grad(w), (std::vector<double>{1, 2}));
}

TEST(GraphBackwardTest, UnusedLeafGetsZeros) {
  G g;
  const NodeId w = g.Input(T({2}, {1, 2}));
  const NodeId unused = g.Input(T({3}, {1, 2, 3}));
  g.Backward(g.Sum(w));
  EXPECT_EQ(g.grad(unused), std::vector<double>(3, 0.0));
}

TEST(GraphBackwardTest, NonScalarLossIsRejected) {
  G g;
  const NodeId w = g.Input(T({2}, {1, 2}));
  EXPECT_THROW(g.Backward(g.Tanh(w)), ContractError);
}

TEST(GraphBackwardTest, RepeatedSweepsAddOncePerSweepToParameter) {
  Tensor<double> param({2}, {3, 4});
  G g;
  const NodeId w = g.Variable(param);
  const NodeId loss = g.Sum(g.Tanh(w));
  g.Backward(loss);
  const std::vector<double> once(param.grad().begin(), param.grad().end());
  g.Backward(loss);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(param.grad()[i], 2.0 * once[i]);
}

TEST(GraphBackwardTest, VariableAccumulatesIntoParameter) {
  Tensor<double> param({2}, {3, 4});
  {
    G g;
    const NodeId w = g.Variable(param);
    g.Backward(g.Sum(g.Mul(w, w)));
  }
  {
    G g;
    const NodeId w = g.Variable(param);
    g.Backward(g.Sum(w));
  }
  EXPECT_EQ(std::vector<double>(param.grad().begin(), param.grad().end()),
            (std::vector<double>{7, 9}));
}

TEST(GraphBackwardTest, ReusedNodeSumsPerUseGradients) {
  // f(w) = sum(tanh(w) * w) + sum(w): w is consumed three times.
  const GraphFunction fn = [](G& g, std::span<const NodeId> in) {
    return g.Add(g.Sum(g.Mul(g.Tanh(in[0]), in[0])), g.Sum(in[0]));
  };
  testing::Rng rng(5);
  const std::vector<T> inputs{T({3, 2}, rng.Vector(6))};
  const auto report = GradCheckFunction("reuse", fn, inputs, 1e-6);
  EXPECT_TRUE(report.pass) << report.max_rel_err;

  G g;
  const NodeId w = g.Input(inputs[0]);
  g.Backward(fn(g, std::span(&w, 1)));
  const auto grad = g.grad(w);
  for (std::size_t i = 0; i < 6; ++i) {
    const double x = inputs[0][i];
    const double t = std::tanh(x);
    EXPECT_NEAR(grad[i], t + x * (1 - t * t) + 1.0, 1e-12);
  }
}

TEST(GraphBackwardTest, SecondBackwardAccumulatesUntilZeroGrad) {
  G g;
  const NodeId w = g.Input(T({2}, {1, 2}));
  const NodeId loss = g.Sum(w);
  g.Backward(loss);
  g.Backward(loss);
  EXPECT_EQ(g.grad(w), (std::vector<double>{2, 2}));
  EXPECT_EQ(g.grad(loss), (std::vector<double>{1}));
  g.ZeroGrad();
  g.Backward(loss);
  EXPECT_EQ(g.grad(w), (std::vector<double>{1, 1}));
}

TEST(GraphBackwardTest, FiniteCheckCatchesNaN) {
  G g;
  g.set_check_finite(true);
  const NodeId w = g.Input(T({1}, {-1.0}));
  const NodeId zero = g.Constant(T({1}, {0.0}));
  EXPECT_THROW(g.Div(g.Sub(w, w), zero), NumericError);
}

TEST(GraphBackwardTest, InputsPrecedeConsumers) {
  G g;
  const NodeId a = g.Input(T({2}, {1, 2}));
  const NodeId b = g.Tanh(a);
  const NodeId c = g.Add(a, b);
  for (std::size_t id : {b.index, c.index}) {
    for (std::size_t in : g.inputs(NodeId{id})) EXPECT_LT(in, id);
  }
  EXPECT_EQ(g.kind(c), OpKind::kAdd);
}

TEST(OpKindTest, NamesRoundTrip) {
  for (OpKind kind : AllOpKinds()) {
    const auto parsed = ParseOpKind(OpKindName(kind));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, kind);
  }
  EXPECT_FALSE(ParseOpKind("convolution").has_value());
}

}  // namespace
}  // namespace stt
