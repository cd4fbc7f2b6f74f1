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

#include "stt/tensor.h"

#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, "x"));
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + ShapeString(shape_));
  }
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + ShapeString(shape_));
  }
  if (NumElements(shape_) != data_.size()) {
    throw DimensionError(fmt::format("shape {} needs {} elements, got {}",
                                     ShapeString(shape_), NumElements(shape_),
                                     data_.size()));
  }
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  return data_.size() / shape_.back();
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  if (shape_.empty()) return data_.empty() ? 0 : 1;
  return shape_.back();
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeString(shape_));
  }
  return data_[0];
}

template <typename Real>
std::span<Real> Tensor<Real>::grad() {
  if (grad_.empty()) grad_.assign(data_.size(), Real(0));
  return grad_;
}

template <typename Real>
void Tensor<Real>::ZeroGrad() {
  grad_.assign(data_.size(), Real(0));
}

template <typename Real>
void Tensor<Real>::Reshape(Shape shape) {
  if (NumElements(shape) != data_.size()) {
    throw DimensionError(fmt::format("cannot reshape {} to {}",
                                     ShapeString(shape_), ShapeString(shape)));
  }
  shape_ = std::move(shape);
}

template <typename Real>
void Tensor<Real>::CheckFinite(const std::string& what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(fmt::format("non-finite value {} at element {} of {}",
                                     static_cast<double>(data_[i]), i, what));
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

template <typename Real>
Real Dot(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) {
    throw DimensionError(fmt::format("dot: length {} vs {}", a.size(), b.size()));
  }
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Real>
Real L2Norm(std::span<const Real> v) {
  return std::sqrt(Dot(v, v));
}

template <typename Real>
std::vector<Real> L2Normalized(std::span<const Real> v) {
  const Real norm = L2Norm(v);
  if (!(norm > kNormEpsilon)) {
    throw DegenerateInputError(fmt::format("l2_normalize: norm {} <= {}",
                                           static_cast<double>(norm), kNormEpsilon));
  }
  std::vector<Real> out(v.begin(), v.end());
  for (Real& x : out) x /= norm;
  return out;
}

template <typename Real>
Real CosineSimilarity(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) {
    throw DimensionError(fmt::format("cosine_similarity: length {} vs {}", a.size(), b.size()));
  }
  const Real na = L2Norm(a);
  const Real nb = L2Norm(b);
  if (!(na > kNormEpsilon) || !(nb > kNormEpsilon)) {
    throw DegenerateInputError("cosine_similarity: zero-norm operand");
  }
  return Dot(a, b) / (na * nb);
}

#define STT_INSTANTIATE_VECTOR_HELPERS(Real)                                  \
  template Real Dot<Real>(std::span<const Real>, std::span<const Real>);      \
  template Real L2Norm<Real>(std::span<const Real>);                          \
  template std::vector<Real> L2Normalized<Real>(std::span<const Real>);        \
  template Real CosineSimilarity<Real>(std::span<const Real>, std::span<const Real>);

STT_INSTANTIATE_VECTOR_HELPERS(float)
STT_INSTANTIATE_VECTOR_HELPERS(double)

#undef STT_INSTANTIATE_VECTOR_HELPERS

}  // namespace stt
