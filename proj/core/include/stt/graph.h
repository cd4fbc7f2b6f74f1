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

#ifndef STT_GRAPH_H_
#define STT_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stt/tensor.h"

namespace stt {

enum class OpKind {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kConcat,
  kSlice,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLogSoftmax,
  kSum,
  kMean,
  kScalarMul,
  kAddScalar,
  kTranspose,
  kReshape,
  kSumLast,
  kMaxLast,
  kL2Normalize,
  kGatherRows,
};

std::string_view OpKindName(OpKind kind);
std::optional<OpKind> ParseOpKind(std::string_view name);
// Every differentiable kind (excludes kLeaf).
std::span<const OpKind> AllOpKinds();

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

// Non-tensor arguments of an operation. Only the fields relevant to the kind
// are read.
struct OpAttrs {
  std::size_t axis = 0;      // concat, slice
  std::size_t start = 0;     // slice
  std::size_t length = 0;    // slice
  double scalar = 0.0;       // scalar_mul, add_scalar
  Shape shape;               // reshape
  std::vector<std::int32_t> ids;  // gather_rows
};

// A tape of operations recorded in topological order. Each node owns its
// output value and, after Backward(), its gradient.
//
// Elementwise binary ops accept either equal shapes or a right operand of
// shape [cols] / [1 x cols] broadcast over the rows of the left operand.
// Softmax-type and reduction-by-row ops act on the last axis.
//
// A graph is confined to one thread. Distinct graphs may be built and
// differentiated concurrently as long as they do not bind the same Variable.
template <typename Real>
class Graph {
 public:
  Graph();

  // Leaf that never receives a gradient.
  NodeId Constant(Tensor<Real> value);
  // Leaf owned by the graph; its gradient is read back with grad().
  NodeId Input(Tensor<Real> value, bool requires_grad = true);
  // Leaf bound to an external parameter. Backward() adds into param.grad().
  // The parameter must outlive the graph.
  NodeId Variable(Tensor<Real>& param);

  // Generic forward entry point; the named helpers below forward to it.
  NodeId Apply(OpKind kind, std::span<const NodeId> inputs,
               const OpAttrs& attrs = {});

  NodeId MatMul(NodeId a, NodeId b);
  NodeId Add(NodeId a, NodeId b);
  NodeId Sub(NodeId a, NodeId b);
  NodeId Mul(NodeId a, NodeId b);
  NodeId Div(NodeId a, NodeId b);
  NodeId Concat(std::span<const NodeId> parts, std::size_t axis);
  NodeId Slice(NodeId a, std::size_t axis, std::size_t start, std::size_t length);
  NodeId Tanh(NodeId a);
  NodeId Sigmoid(NodeId a);
  NodeId Relu(NodeId a);
  NodeId Softmax(NodeId a);
  NodeId LogSoftmax(NodeId a);
  NodeId Sum(NodeId a);
  NodeId Mean(NodeId a);
  NodeId ScalarMul(NodeId a, double s);
  NodeId AddScalar(NodeId a, double s);
  NodeId Transpose(NodeId a);
  NodeId Reshape(NodeId a, Shape shape);
  NodeId SumLast(NodeId a);
  NodeId MaxLast(NodeId a);
  NodeId L2Normalize(NodeId a);
  NodeId GatherRows(NodeId table, std::vector<std::int32_t> ids);

  // Reverse-mode sweep from a single-element node. Leaf gradients (and bound
  // parameters) accumulate, so calling Backward twice without ZeroGrad()
  // sums the two sweeps; interior node gradients hold the latest sweep.
  void Backward(NodeId loss);
  void ZeroGrad();

  const Tensor<Real>& value(NodeId id) const { return node(id).value; }
  // Gradient w.r.t. the node; zeros if the node took no part in the loss.
  std::vector<Real> grad(NodeId id) const;
  OpKind kind(NodeId id) const { return node(id).kind; }
  std::span<const std::size_t> inputs(NodeId id) const { return node(id).inputs; }
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // NaN/Inf checks on every forward output and on Backward() gradients.
  // Defaults to on in debug builds.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::size_t> inputs;
    OpAttrs attrs;
    Tensor<Real> value;
    std::vector<Real> grad;
    Tensor<Real>* external = nullptr;
    bool requires_grad = false;
    // Cached forward quantity reused by backward (row argmax, row norms).
    std::vector<Real> aux;
  };

  const Node& node(NodeId id) const;
  NodeId Push(Node n);
  Tensor<Real> Forward(OpKind kind, std::span<const std::size_t> in,
                       const OpAttrs& attrs, std::vector<Real>& aux) const;
  void BackwardNode(const Node& n);
  std::vector<Real>& GradOf(std::size_t index);

  // Deque so references returned by value() survive later appends.
  std::deque<Node> nodes_;
  bool check_finite_;
};

extern template class Graph<float>;
extern template class Graph<double>;

// Differentiable cosine similarity of two equal-shape vectors (or row-wise
// for matrices): sum_last(l2n(a) * l2n(b)).
template <typename Real>
NodeId CosineSimilarity(Graph<Real>& g, NodeId a, NodeId b);

}  // namespace stt

#endif  // STT_GRAPH_H_
