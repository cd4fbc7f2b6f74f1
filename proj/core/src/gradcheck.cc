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

#include "stt/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt {
namespace {

double Evaluate(const GraphFunction& fn, std::span<const Tensor<double>> inputs) {
  Graph<double> g;
  g.set_check_finite(true);
  std::vector<NodeId> ids;
  ids.reserve(inputs.size());
  for (const auto& t : inputs) ids.push_back(g.Constant(t));
  return g.value(fn(g, ids)).item();
}

Tensor<double> RandomTensor(const Shape& shape, std::mt19937_64& rng, OpKind kind,
                            std::size_t operand) {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.1, 1.0);
  std::uniform_real_distribution<double> denom(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(shape);
  auto data = t.data();
  if (kind == OpKind::kRelu) {
    // Stay clear of the kink at zero.
    for (double& x : data) x = sign(rng) ? magnitude(rng) : -magnitude(rng);
  } else if (kind == OpKind::kDiv && operand == 1) {
    for (double& x : data) x = sign(rng) ? denom(rng) : -denom(rng);
  } else if (kind == OpKind::kMaxLast) {
    // Distinct entries per row so the argmax is stable under perturbation.
    const std::size_t cols = t.cols();
    std::vector<std::size_t> order(cols);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t c = 0; c < cols; ++c) {
        data[r * cols + c] = 0.2 * static_cast<double>(order[c]) + 0.05 * uniform(rng);
      }
    }
  } else {
    for (double& x : data) x = uniform(rng);
  }
  return t;
}

NodeId ApplyForCheck(Graph<double>& g, OpKind kind, std::span<const NodeId> in) {
  const Tensor<double>& a = g.value(in[0]);
  switch (kind) {
    case OpKind::kConcat: {
      const bool same_cols = std::all_of(in.begin(), in.end(), [&](NodeId id) {
        return g.value(id).cols() == a.cols();
      });
      return g.Concat(in, same_cols ? 0 : 1);
    }
    case OpKind::kSlice: {
      if (a.cols() > 1) return g.Slice(in[0], 1, 1, a.cols() - 1);
      return g.Slice(in[0], 0, a.rows() > 1 ? 1 : 0, a.rows() > 1 ? a.rows() - 1 : 1);
    }
    case OpKind::kScalarMul:
      return g.ScalarMul(in[0], 1.7);
    case OpKind::kAddScalar:
      return g.AddScalar(in[0], 0.3);
    case OpKind::kReshape:
      return g.Reshape(in[0], {a.size()});
    case OpKind::kGatherRows: {
      // Repeated ids exercise gradient accumulation.
      std::vector<std::int32_t> ids;
      for (std::size_t r = 0; r < a.rows() + 2; ++r) {
        ids.push_back(static_cast<std::int32_t>((r * 2) % a.rows()));
      }
      return g.GatherRows(in[0], std::move(ids));
    }
    default:
      return g.Apply(kind, in);
  }
}

}  // namespace

GradCheckReport GradCheckFunction(const std::string& name, const GraphFunction& fn,
                                  std::span<const Tensor<double>> inputs,
                                  double tolerance, double step) {
  GradCheckReport report;
  report.name = name;

  Graph<double> g;
  g.set_check_finite(true);
  std::vector<NodeId> ids;
  for (const auto& t : inputs) ids.push_back(g.Input(t, true));
  const NodeId loss = fn(g, ids);
  g.Backward(loss);

  std::vector<Tensor<double>> work(inputs.begin(), inputs.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const std::vector<double> analytic = g.grad(ids[i]);
    for (std::size_t e = 0; e < work[i].size(); ++e) {
      const double saved = work[i][e];
      auto at = [&](double offset) {
        work[i][e] = saved + offset;
        return Evaluate(fn, work);
      };
      const double h = step;
      // Five-point central stencil, truncation error O(h^4).
      const double numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      work[i][e] = saved;
      const double denom =
          std::max({std::abs(analytic[e]), std::abs(numeric), kRelErrFloor});
      const double rel = std::abs(analytic[e] - numeric) / denom;
      if (rel >= report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_input = i;
        report.worst_element = e;
      }
    }
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

std::vector<Shape> DefaultGradCheckShapes(OpKind kind) {
  switch (kind) {
    case OpKind::kMatMul:
      return {{2, 3}, {3, 2}};
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv:
      return {{3, 4}, {3, 4}};
    case OpKind::kConcat:
      return {{2, 3}, {1, 3}};
    case OpKind::kSlice:
    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax:
    case OpKind::kSumLast:
    case OpKind::kMaxLast:
    case OpKind::kL2Normalize:
    case OpKind::kSum:
    case OpKind::kMean:
      return {{3, 4}};
    case OpKind::kTranspose:
    case OpKind::kReshape:
      return {{2, 3}};
    case OpKind::kGatherRows:
      return {{5, 3}};
    default:
      return {{4}};
  }
}

GradCheckReport GradCheck(OpKind kind, std::span<const Shape> shapes, double tolerance,
                          std::uint64_t seed) {
  if (kind == OpKind::kLeaf) throw ContractError("gradcheck: leaf is not an operation");
  std::vector<Shape> used(shapes.begin(), shapes.end());
  if (used.empty()) used = DefaultGradCheckShapes(kind);

  std::mt19937_64 rng(seed);
  std::vector<Tensor<double>> inputs;
  for (std::size_t k = 0; k < used.size(); ++k) {
    inputs.push_back(RandomTensor(used[k], rng, kind, k));
  }

  // Probe output shape once to draw the projection weights.
  Graph<double> probe;
  std::vector<NodeId> probe_ids;
  for (const auto& t : inputs) probe_ids.push_back(probe.Constant(t));
  const Shape out_shape = probe.value(ApplyForCheck(probe, kind, probe_ids)).shape();
  std::uniform_real_distribution<double> uniform(0.5, 1.5);
  Tensor<double> projection(out_shape);
  for (double& x : projection.data()) x = uniform(rng);

  GraphFunction fn = [kind, projection](Graph<double>& g, std::span<const NodeId> in) {
    const NodeId out = ApplyForCheck(g, kind, in);
    return g.Sum(g.Mul(out, g.Constant(projection)));
  };
  return GradCheckFunction(std::string(OpKindName(kind)), fn, inputs, tolerance);
}

}  // namespace stt
