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

#include "stt/graph.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt {
namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 23> kKindNames = {{
    {OpKind::kLeaf, "leaf"},
    {OpKind::kMatMul, "matmul"},
    {OpKind::kAdd, "add"},
    {OpKind::kSub, "sub"},
    {OpKind::kMul, "mul"},
    {OpKind::kDiv, "div"},
    {OpKind::kConcat, "concat"},
    {OpKind::kSlice, "slice"},
    {OpKind::kTanh, "tanh"},
    {OpKind::kSigmoid, "sigmoid"},
    {OpKind::kRelu, "relu"},
    {OpKind::kSoftmax, "softmax"},
    {OpKind::kLogSoftmax, "log_softmax"},
    {OpKind::kSum, "sum"},
    {OpKind::kMean, "mean"},
    {OpKind::kScalarMul, "scalar_mul"},
    {OpKind::kAddScalar, "add_scalar"},
    {OpKind::kTranspose, "transpose"},
    {OpKind::kReshape, "reshape"},
    {OpKind::kSumLast, "sum_last"},
    {OpKind::kMaxLast, "max_last"},
    {OpKind::kL2Normalize, "l2_normalize"},
    {OpKind::kGatherRows, "gather_rows"},
}};

constexpr std::array<OpKind, 22> kDifferentiableKinds = {
    OpKind::kMatMul,    OpKind::kAdd,        OpKind::kSub,       OpKind::kMul,
    OpKind::kDiv,       OpKind::kConcat,     OpKind::kSlice,     OpKind::kTanh,
    OpKind::kSigmoid,   OpKind::kRelu,       OpKind::kSoftmax,   OpKind::kLogSoftmax,
    OpKind::kSum,       OpKind::kMean,       OpKind::kScalarMul, OpKind::kAddScalar,
    OpKind::kTranspose, OpKind::kReshape,    OpKind::kSumLast,   OpKind::kMaxLast,
    OpKind::kL2Normalize, OpKind::kGatherRows,
};

std::size_t ExpectedArity(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf:
      return 0;
    case OpKind::kMatMul:
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv:
      return 2;
    case OpKind::kConcat:
      return std::numeric_limits<std::size_t>::max();
    default:
      return 1;
  }
}

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename Real>
void GemmNN(std::size_t m, std::size_t k, std::size_t n, const Real* a,
            const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * k + p];
      if (av == Real(0)) continue;
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// A[m x k] += C[m x n] * B[k x n]^T
template <typename Real>
void GemmNT(std::size_t m, std::size_t k, std::size_t n, const Real* c,
            const Real* b, Real* a) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real* brow = b + p * n;
      Real acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += crow[j] * brow[j];
      a[i * k + p] += acc;
    }
  }
}

// B[k x n] += A[m x k]^T * C[m x n]
template <typename Real>
void GemmTN(std::size_t m, std::size_t k, std::size_t n, const Real* a,
            const Real* c, Real* b) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * k + p];
      if (av == Real(0)) continue;
      Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * crow[j];
    }
  }
}

template <typename Real>
bool IsRowBroadcast(const Tensor<Real>& a, const Tensor<Real>& b) {
  return a.shape() != b.shape() && b.rows() == 1 && b.cols() == a.cols() &&
         b.size() != a.size();
}

template <typename Real>
void CheckBinary(std::string_view op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() == b.shape() || (a.size() == b.size() && a.rows() == b.rows())) return;
  if (IsRowBroadcast(a, b)) return;
  throw DimensionError(fmt::format("{}: incompatible shapes {} and {}", op,
                                   ShapeString(a.shape()), ShapeString(b.shape())));
}

}  // namespace

std::string_view OpKindName(OpKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<OpKind> ParseOpKind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::span<const OpKind> AllOpKinds() { return kDifferentiableKinds; }

template <typename Real>
Graph<Real>::Graph() {
#ifdef NDEBUG
  check_finite_ = false;
#else
  check_finite_ = true;
#endif
}

template <typename Real>
const typename Graph<Real>::Node& Graph<Real>::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ContractError(fmt::format("node id {} out of range ({} nodes)",
                                    id.index, nodes_.size()));
  }
  return nodes_[id.index];
}

template <typename Real>
NodeId Graph<Real>::Push(Node n) {
  if (check_finite_) {
    n.value.CheckFinite(fmt::format("output of {} (node {})", OpKindName(n.kind),
                                    nodes_.size()));
  }
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

template <typename Real>
NodeId Graph<Real>::Constant(Tensor<Real> value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

template <typename Real>
NodeId Graph<Real>::Input(Tensor<Real> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return Push(std::move(n));
}

template <typename Real>
NodeId Graph<Real>::Variable(Tensor<Real>& param) {
  Node n;
  n.value = Tensor<Real>(param.shape(), std::vector<Real>(param.data().begin(),
                                                          param.data().end()));
  n.external = &param;
  n.requires_grad = true;
  return Push(std::move(n));
}

template <typename Real>
NodeId Graph<Real>::Apply(OpKind kind, std::span<const NodeId> inputs,
                          const OpAttrs& attrs) {
  if (kind == OpKind::kLeaf) {
    throw ContractError("Apply: leaves are created with Constant/Input/Variable");
  }
  const std::size_t arity = ExpectedArity(kind);
  if (arity != std::numeric_limits<std::size_t>::max() && inputs.size() != arity) {
    throw ContractError(fmt::format("{}: expected {} inputs, got {}",
                                    OpKindName(kind), arity, inputs.size()));
  }
  if (inputs.empty()) {
    throw ContractError(fmt::format("{}: no inputs", OpKindName(kind)));
  }
  Node n;
  n.kind = kind;
  n.attrs = attrs;
  for (NodeId id : inputs) {
    node(id);  // range check
    n.inputs.push_back(id.index);
    n.requires_grad = n.requires_grad || nodes_[id.index].requires_grad;
  }
  n.value = Forward(kind, n.inputs, attrs, n.aux);
  return Push(std::move(n));
}

template <typename Real>
Tensor<Real> Graph<Real>::Forward(OpKind kind, std::span<const std::size_t> in,
                                  const OpAttrs& attrs, std::vector<Real>& aux) const {
  const Tensor<Real>& a = nodes_[in[0]].value;
  const std::string_view op = OpKindName(kind);
  switch (kind) {
    case OpKind::kMatMul: {
      const Tensor<Real>& b = nodes_[in[1]].value;
      if (a.cols() != b.rows()) {
        throw DimensionError(fmt::format("matmul: inner dimensions differ, {} x {}",
                                         ShapeString(a.shape()), ShapeString(b.shape())));
      }
      Tensor<Real> out({a.rows(), b.cols()});
      GemmNN(a.rows(), a.cols(), b.cols(), a.data().data(), b.data().data(),
             out.data().data());
      return out;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      const Tensor<Real>& b = nodes_[in[1]].value;
      CheckBinary(op, a, b);
      const bool bc = IsRowBroadcast(a, b);
      Tensor<Real> out = a;
      auto o = out.data();
      auto bv = b.data();
      const std::size_t cols = a.cols();
      for (std::size_t i = 0; i < o.size(); ++i) {
        const Real y = bc ? bv[i % cols] : bv[i];
        switch (kind) {
          case OpKind::kAdd: o[i] += y; break;
          case OpKind::kSub: o[i] -= y; break;
          case OpKind::kMul: o[i] *= y; break;
          default: o[i] /= y; break;
        }
      }
      return out;
    }
    case OpKind::kConcat: {
      std::size_t rows = 0, cols = 0;
      if (attrs.axis > 1) {
        throw DimensionError(fmt::format("concat: axis {} unsupported", attrs.axis));
      }
      for (std::size_t idx : in) {
        const Tensor<Real>& t = nodes_[idx].value;
        if (attrs.axis == 0) {
          if (cols != 0 && t.cols() != cols) {
            throw DimensionError(fmt::format("concat: column mismatch {} vs {}",
                                             cols, ShapeString(t.shape())));
          }
          cols = t.cols();
          rows += t.rows();
        } else {
          if (rows != 0 && t.rows() != rows) {
            throw DimensionError(fmt::format("concat: row mismatch {} vs {}", rows,
                                             ShapeString(t.shape())));
          }
          rows = t.rows();
          cols += t.cols();
        }
      }
      Tensor<Real> out({rows, cols});
      std::size_t offset = 0;
      for (std::size_t idx : in) {
        const Tensor<Real>& t = nodes_[idx].value;
        for (std::size_t r = 0; r < t.rows(); ++r) {
          for (std::size_t c = 0; c < t.cols(); ++c) {
            if (attrs.axis == 0) {
              out.at(offset + r, c) = t.at(r, c);
            } else {
              out.at(r, offset + c) = t.at(r, c);
            }
          }
        }
        offset += attrs.axis == 0 ? t.rows() : t.cols();
      }
      return out;
    }
    case OpKind::kSlice: {
      const std::size_t extent = attrs.axis == 0 ? a.rows() : a.cols();
      if (attrs.axis > 1 || attrs.length == 0 || attrs.start + attrs.length > extent) {
        throw DimensionError(fmt::format("slice: [{}, +{}) on axis {} of {}", attrs.start,
                                         attrs.length, attrs.axis, ShapeString(a.shape())));
      }
      const std::size_t rows = attrs.axis == 0 ? attrs.length : a.rows();
      const std::size_t cols = attrs.axis == 0 ? a.cols() : attrs.length;
      Tensor<Real> out({rows, cols});
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          out.at(r, c) = attrs.axis == 0 ? a.at(attrs.start + r, c)
                                         : a.at(r, attrs.start + c);
        }
      }
      return out;
    }
    case OpKind::kTanh:
    case OpKind::kSigmoid:
    case OpKind::kRelu: {
      Tensor<Real> out = a;
      for (Real& x : out.data()) {
        if (kind == OpKind::kTanh) {
          x = std::tanh(x);
        } else if (kind == OpKind::kSigmoid) {
          x = Real(1) / (Real(1) + std::exp(-x));
        } else {
          x = x > Real(0) ? x : Real(0);
        }
      }
      return out;
    }
    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax: {
      Tensor<Real> out = a;
      const std::size_t cols = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        Real* row = out.data().data() + r * cols;
        const Real mx = *std::max_element(row, row + cols);
        Real total = 0;
        for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - mx);
        const Real log_total = std::log(total);
        for (std::size_t c = 0; c < cols; ++c) {
          row[c] = kind == OpKind::kSoftmax ? std::exp(row[c] - mx) / total
                                            : row[c] - mx - log_total;
        }
      }
      return out;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      Real total = 0;
      for (Real x : a.data()) total += x;
      if (kind == OpKind::kMean) total /= static_cast<Real>(a.size());
      return Tensor<Real>::Scalar(total);
    }
    case OpKind::kScalarMul:
    case OpKind::kAddScalar: {
      Tensor<Real> out = a;
      const Real s = static_cast<Real>(attrs.scalar);
      for (Real& x : out.data()) x = kind == OpKind::kScalarMul ? x * s : x + s;
      return out;
    }
    case OpKind::kTranspose: {
      Tensor<Real> out({a.cols(), a.rows()});
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
      }
      return out;
    }
    case OpKind::kReshape: {
      if (NumElements(attrs.shape) != a.size()) {
        throw DimensionError(fmt::format("reshape: {} to {}", ShapeString(a.shape()),
                                         ShapeString(attrs.shape)));
      }
      return Tensor<Real>(attrs.shape, a.values());
    }
    case OpKind::kSumLast:
    case OpKind::kMaxLast: {
      Tensor<Real> out({a.rows(), 1});
      if (kind == OpKind::kMaxLast) aux.assign(a.rows(), Real(0));
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const Real* row = a.data().data() + r * a.cols();
        if (kind == OpKind::kSumLast) {
          Real total = 0;
          for (std::size_t c = 0; c < a.cols(); ++c) total += row[c];
          out[r] = total;
        } else {
          const auto it = std::max_element(row, row + a.cols());
          out[r] = *it;
          aux[r] = static_cast<Real>(it - row);
        }
      }
      return out;
    }
    case OpKind::kL2Normalize: {
      Tensor<Real> out = a;
      aux.assign(a.rows(), Real(0));
      for (std::size_t r = 0; r < a.rows(); ++r) {
        std::span<Real> row = out.data().subspan(r * a.cols(), a.cols());
        Real sq = 0;
        for (Real x : row) sq += x * x;
        const Real norm = std::sqrt(sq);
        if (!(norm > static_cast<Real>(kNormEpsilon))) {
          throw DegenerateInputError(fmt::format(
              "l2_normalize: row {} of {} has norm {} <= {}", r,
              ShapeString(a.shape()), static_cast<double>(norm), kNormEpsilon));
        }
        for (Real& x : row) x /= norm;
        aux[r] = norm;
      }
      return out;
    }
    case OpKind::kGatherRows: {
      Tensor<Real> out({attrs.ids.size(), a.cols()});
      if (attrs.ids.empty()) throw DimensionError("gather_rows: empty id list");
      for (std::size_t r = 0; r < attrs.ids.size(); ++r) {
        const std::int32_t id = attrs.ids[r];
        if (id < 0 || static_cast<std::size_t>(id) >= a.rows()) {
          throw DimensionError(fmt::format("gather_rows: id {} outside table {}", id,
                                           ShapeString(a.shape())));
        }
        std::copy_n(a.data().data() + id * a.cols(), a.cols(),
                    out.data().data() + r * a.cols());
      }
      return out;
    }
    case OpKind::kLeaf:
      break;
  }
  throw ContractError(fmt::format("forward: unhandled op {}", op));
}

template <typename Real>
std::vector<Real>& Graph<Real>::GradOf(std::size_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty()) n.grad.assign(n.value.size(), Real(0));
  return n.grad;
}

template <typename Real>
void Graph<Real>::BackwardNode(const Node& n) {
  const std::vector<Real>& gy = n.grad;
  const Tensor<Real>& y = n.value;
  auto needs = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  const Tensor<Real>& a = nodes_[n.inputs[0]].value;

  switch (n.kind) {
    case OpKind::kMatMul: {
      const Tensor<Real>& b = nodes_[n.inputs[1]].value;
      if (needs(0)) {
        GemmNT(a.rows(), a.cols(), b.cols(), gy.data(), b.data().data(),
               GradOf(n.inputs[0]).data());
      }
      if (needs(1)) {
        GemmTN(a.rows(), a.cols(), b.cols(), a.data().data(), gy.data(),
               GradOf(n.inputs[1]).data());
      }
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      const Tensor<Real>& b = nodes_[n.inputs[1]].value;
      const bool bc = IsRowBroadcast(a, b);
      const std::size_t cols = a.cols();
      if (needs(0)) {
        std::vector<Real>& ga = GradOf(n.inputs[0]);
        for (std::size_t i = 0; i < gy.size(); ++i) {
          const Real bv = bc ? b[i % cols] : b[i];
          switch (n.kind) {
            case OpKind::kMul: ga[i] += gy[i] * bv; break;
            case OpKind::kDiv: ga[i] += gy[i] / bv; break;
            default: ga[i] += gy[i]; break;
          }
        }
      }
      if (needs(1)) {
        std::vector<Real>& gb = GradOf(n.inputs[1]);
        for (std::size_t i = 0; i < gy.size(); ++i) {
          const std::size_t j = bc ? i % cols : i;
          switch (n.kind) {
            case OpKind::kAdd: gb[j] += gy[i]; break;
            case OpKind::kSub: gb[j] -= gy[i]; break;
            case OpKind::kMul: gb[j] += gy[i] * a[i]; break;
            default: gb[j] -= gy[i] * a[i] / (b[j] * b[j]); break;
          }
        }
      }
      return;
    }
    case OpKind::kConcat: {
      std::size_t offset = 0;
      const std::size_t out_cols = y.cols();
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor<Real>& t = nodes_[n.inputs[k]].value;
        if (needs(k)) {
          std::vector<Real>& gt = GradOf(n.inputs[k]);
          for (std::size_t r = 0; r < t.rows(); ++r) {
            for (std::size_t c = 0; c < t.cols(); ++c) {
              const std::size_t src = n.attrs.axis == 0 ? (offset + r) * out_cols + c
                                                        : r * out_cols + offset + c;
              gt[r * t.cols() + c] += gy[src];
            }
          }
        }
        offset += n.attrs.axis == 0 ? t.rows() : t.cols();
      }
      return;
    }
    case OpKind::kSlice: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        for (std::size_t c = 0; c < y.cols(); ++c) {
          const std::size_t dst = n.attrs.axis == 0
                                      ? (n.attrs.start + r) * a.cols() + c
                                      : r * a.cols() + n.attrs.start + c;
          ga[dst] += gy[r * y.cols() + c];
        }
      }
      return;
    }
    case OpKind::kTanh:
    case OpKind::kSigmoid:
    case OpKind::kRelu: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) {
        const Real v = y[i];
        Real d;
        if (n.kind == OpKind::kTanh) {
          d = Real(1) - v * v;
        } else if (n.kind == OpKind::kSigmoid) {
          d = v * (Real(1) - v);
        } else {
          d = a[i] > Real(0) ? Real(1) : Real(0);
        }
        ga[i] += gy[i] * d;
      }
      return;
    }
    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      const std::size_t cols = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const Real* yr = y.data().data() + r * cols;
        const Real* gr = gy.data() + r * cols;
        Real* out = ga.data() + r * cols;
        if (n.kind == OpKind::kSoftmax) {
          Real dot = 0;
          for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
          for (std::size_t c = 0; c < cols; ++c) out[c] += yr[c] * (gr[c] - dot);
        } else {
          Real total = 0;
          for (std::size_t c = 0; c < cols; ++c) total += gr[c];
          for (std::size_t c = 0; c < cols; ++c) out[c] += gr[c] - std::exp(yr[c]) * total;
        }
      }
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      Real g = gy[0];
      if (n.kind == OpKind::kMean) g /= static_cast<Real>(a.size());
      for (Real& x : ga) x += g;
      return;
    }
    case OpKind::kScalarMul:
    case OpKind::kAddScalar: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      const Real s = n.kind == OpKind::kScalarMul ? static_cast<Real>(n.attrs.scalar) : Real(1);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * s;
      return;
    }
    case OpKind::kTranspose: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
          ga[r * a.cols() + c] += gy[c * a.rows() + r];
        }
      }
      return;
    }
    case OpKind::kReshape: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      return;
    }
    case OpKind::kSumLast:
    case OpKind::kMaxLast: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      const std::size_t cols = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        if (n.kind == OpKind::kSumLast) {
          for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += gy[r];
        } else {
          ga[r * cols + static_cast<std::size_t>(n.aux[r])] += gy[r];
        }
      }
      return;
    }
    case OpKind::kL2Normalize: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      const std::size_t cols = y.cols();
      for (std::size_t r = 0; r < y.rows(); ++r) {
        const Real* yr = y.data().data() + r * cols;
        const Real* gr = gy.data() + r * cols;
        Real dot = 0;
        for (std::size_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
        const Real inv = Real(1) / n.aux[r];
        for (std::size_t c = 0; c < cols; ++c) {
          ga[r * cols + c] += (gr[c] - yr[c] * dot) * inv;
        }
      }
      return;
    }
    case OpKind::kGatherRows: {
      std::vector<Real>& ga = GradOf(n.inputs[0]);
      const std::size_t cols = a.cols();
      for (std::size_t r = 0; r < n.attrs.ids.size(); ++r) {
        Real* dst = ga.data() + static_cast<std::size_t>(n.attrs.ids[r]) * cols;
        const Real* src = gy.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
      return;
    }
    case OpKind::kLeaf:
      return;
  }
}

template <typename Real>
void Graph<Real>::Backward(NodeId loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward: loss must be a single-element tensor, got shape " +
                        ShapeString(root.value.shape()));
  }
  if (!root.requires_grad) return;
  // Interior gradients are scratch for this sweep; leaf gradients from
  // earlier sweeps are set aside and added back at the end.
  std::vector<std::pair<std::size_t, std::vector<Real>>> previous;
  for (std::size_t i = 0; i <= loss.index; ++i) {
    Node& n = nodes_[i];
    if (n.kind == OpKind::kLeaf && !n.grad.empty()) previous.emplace_back(i, std::move(n.grad));
    n.grad.clear();
  }
  GradOf(loss.index)[0] = Real(1);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (check_finite_) {
      for (Real g : n.grad) {
        if (!std::isfinite(g)) {
          throw NumericError(fmt::format("non-finite gradient at node {} ({})", i,
                                         OpKindName(n.kind)));
        }
      }
    }
    if (n.kind == OpKind::kLeaf) {
      if (n.external != nullptr) {
        auto dst = n.external->grad();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
      }
      continue;
    }
    BackwardNode(n);
  }
  for (auto& [i, old] : previous) {
    std::vector<Real>& g = nodes_[i].grad;
    if (g.empty()) {
      g = std::move(old);
    } else {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += old[k];
    }
  }
}

template <typename Real>
void Graph<Real>::ZeroGrad() {
  for (Node& n : nodes_) n.grad.clear();
}

template <typename Real>
std::vector<Real> Graph<Real>::grad(NodeId id) const {
  const Node& n = node(id);
  if (n.grad.empty()) return std::vector<Real>(n.value.size(), Real(0));
  return n.grad;
}

#define STT_DEFINE_UNARY(Name, Kind)                 \
  template <typename Real>                           \
  NodeId Graph<Real>::Name(NodeId a) {               \
    const NodeId in[] = {a};                         \
    return Apply(OpKind::Kind, in);                  \
  }
#define STT_DEFINE_BINARY(Name, Kind)                \
  template <typename Real>                           \
  NodeId Graph<Real>::Name(NodeId a, NodeId b) {     \
    const NodeId in[] = {a, b};                      \
    return Apply(OpKind::Kind, in);                  \
  }

STT_DEFINE_BINARY(MatMul, kMatMul)
STT_DEFINE_BINARY(Add, kAdd)
STT_DEFINE_BINARY(Sub, kSub)
STT_DEFINE_BINARY(Mul, kMul)
STT_DEFINE_BINARY(Div, kDiv)
STT_DEFINE_UNARY(Tanh, kTanh)
STT_DEFINE_UNARY(Sigmoid, kSigmoid)
STT_DEFINE_UNARY(Relu, kRelu)
STT_DEFINE_UNARY(Softmax, kSoftmax)
STT_DEFINE_UNARY(LogSoftmax, kLogSoftmax)
STT_DEFINE_UNARY(Sum, kSum)
STT_DEFINE_UNARY(Mean, kMean)
STT_DEFINE_UNARY(Transpose, kTranspose)
STT_DEFINE_UNARY(SumLast, kSumLast)
STT_DEFINE_UNARY(MaxLast, kMaxLast)
STT_DEFINE_UNARY(L2Normalize, kL2Normalize)

#undef STT_DEFINE_UNARY
#undef STT_DEFINE_BINARY

template <typename Real>
NodeId Graph<Real>::Concat(std::span<const NodeId> parts, std::size_t axis) {
  OpAttrs attrs;
  attrs.axis = axis;
  return Apply(OpKind::kConcat, parts, attrs);
}

template <typename Real>
NodeId Graph<Real>::Slice(NodeId a, std::size_t axis, std::size_t start,
                          std::size_t length) {
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.start = start;
  attrs.length = length;
  const NodeId in[] = {a};
  return Apply(OpKind::kSlice, in, attrs);
}

template <typename Real>
NodeId Graph<Real>::ScalarMul(NodeId a, double s) {
  OpAttrs attrs;
  attrs.scalar = s;
  const NodeId in[] = {a};
  return Apply(OpKind::kScalarMul, in, attrs);
}

template <typename Real>
NodeId Graph<Real>::AddScalar(NodeId a, double s) {
  OpAttrs attrs;
  attrs.scalar = s;
  const NodeId in[] = {a};
  return Apply(OpKind::kAddScalar, in, attrs);
}

template <typename Real>
NodeId Graph<Real>::Reshape(NodeId a, Shape shape) {
  OpAttrs attrs;
  attrs.shape = std::move(shape);
  const NodeId in[] = {a};
  return Apply(OpKind::kReshape, in, attrs);
}

template <typename Real>
NodeId Graph<Real>::GatherRows(NodeId table, std::vector<std::int32_t> ids) {
  OpAttrs attrs;
  attrs.ids = std::move(ids);
  const NodeId in[] = {table};
  return Apply(OpKind::kGatherRows, in, attrs);
}

template class Graph<float>;
template class Graph<double>;

template <typename Real>
NodeId CosineSimilarity(Graph<Real>& g, NodeId a, NodeId b) {
  const Tensor<Real>& va = g.value(a);
  const Tensor<Real>& vb = g.value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
    throw DimensionError(fmt::format("cosine_similarity: {} vs {}", ShapeString(va.shape()),
                                     ShapeString(vb.shape())));
  }
  return g.SumLast(g.Mul(g.L2Normalize(a), g.L2Normalize(b)));
}

template NodeId CosineSimilarity<float>(Graph<float>&, NodeId, NodeId);
template NodeId CosineSimilarity<double>(Graph<double>&, NodeId, NodeId);

}  // namespace stt
