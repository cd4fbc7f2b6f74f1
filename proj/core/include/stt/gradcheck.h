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

#ifndef STT_GRADCHECK_H_
#define STT_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stt/graph.h"
#include "stt/tensor.h"

namespace stt {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0.0;
  // Input index and element index of the worst entry.
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
  bool pass = false;
};

// Finite-difference step (five-point central stencil) for 64-bit checks.
inline constexpr double kFiniteDifferenceStep = 1e-5;
// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kRelErrFloor = 1e-3;

// Builds a scalar-valued function of `inputs` on a fresh graph.
using GraphFunction =
    std::function<NodeId(Graph<double>&, std::span<const NodeId> inputs)>;

// Compares reverse-mode gradients of `fn` against central finite differences
// at `inputs`. Passes iff the maximum relative error is strictly below
// `tolerance`.
GradCheckReport GradCheckFunction(const std::string& name, const GraphFunction& fn,
                                  std::span<const Tensor<double>> inputs,
                                  double tolerance, double step = kFiniteDifferenceStep);

// Checks one primitive op kind on seeded random inputs of the given shapes.
// The op output is reduced to a scalar through a fixed random projection so
// every output element contributes. Kinds with non-tensor arguments (slice,
// concat, reshape, gather_rows, scalar ops) use fixed attributes derived
// from the shapes. An empty `shapes` picks a default shape set for the kind.
GradCheckReport GradCheck(OpKind kind, std::span<const Shape> shapes,
                          double tolerance, std::uint64_t seed = 0);

// Default operand shapes used by GradCheck when none are supplied.
std::vector<Shape> DefaultGradCheckShapes(OpKind kind);

}  // namespace stt

#endif  // STT_GRADCHECK_H_
