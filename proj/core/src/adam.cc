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

#include "stt/adam.h"

#include <cmath>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::train {

AdamState AdamState::ZerosLike(const NamedParams& params, double beta1, double beta2,
                               double epsilon) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const auto& [name, t] : params) {
    s.names.push_back(name);
    s.m.emplace_back(t->shape());
    s.v.emplace_back(t->shape());
  }
  return s;
}

void AdamStep(const NamedParams& params, AdamState& state, double lr) {
  if (!(lr > 0)) throw ContractError(fmt::format("adam_step: lr must be > 0, got {}", lr));
  if (params.size() != state.m.size() || params.size() != state.v.size()) {
    throw DimensionError(fmt::format("adam_step: {} parameters but state holds {}",
                                     params.size(), state.m.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, t] = params[i];
    if (t->shape() != state.m[i].shape() || t->shape() != state.v[i].shape()) {
      throw DimensionError(fmt::format("adam_step: state shape mismatch for {}", name));
    }
    for (float g : t->grad()) {
      if (!std::isfinite(g)) {
        throw NumericError(fmt::format("adam_step: non-finite gradient in parameter '{}'", name));
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<float>& p = *params[i].second;
    const auto g = p.grad();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    auto w = p.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      w[k] = static_cast<float>(w[k] - lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

double ClipGradNorm(const NamedParams& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : params) {
    for (float g : t->grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& [name, t] : params) {
      for (float& g : t->grad()) g = static_cast<float>(g * scale);
    }
  }
  return norm;
}

}  // namespace stt::train
