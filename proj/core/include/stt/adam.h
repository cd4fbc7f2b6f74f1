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

#ifndef STT_ADAM_H_
#define STT_ADAM_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stt/tensor.h"

namespace stt::train {

using NamedParams = std::vector<std::pair<std::string, Tensor<float>*>>;

// First/second moment estimates mirroring the parameter list.
struct AdamState {
  std::vector<std::string> names;
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState ZerosLike(const NamedParams& params, double beta1 = 0.9,
                             double beta2 = 0.999, double epsilon = 1e-8);

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update using each tensor's grad(). Throws
// NumericError naming the parameter when a gradient is NaN/Inf (before any
// parameter is modified), DimensionError when the state does not mirror the
// parameters, ContractError when lr <= 0.
void AdamStep(const NamedParams& params, AdamState& state, double lr);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 leaves gradients alone.
double ClipGradNorm(const NamedParams& params, double max_norm);

}  // namespace stt::train

#endif  // STT_ADAM_H_
