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

#ifndef STT_TENSOR_H_
#define STT_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stt {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Norm floor used by l2 normalization and cosine similarity.
inline constexpr double kNormEpsilon = 1e-12;

// Dense row-major n-dimensional array. A tensor may carry a gradient buffer
// of the same shape; the buffer is absent until first requested.
//
// Most kernels view a tensor as a matrix: rows() is the product of all
// leading dimensions and cols() is the last dimension.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor Scalar(Real value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool empty() const { return data_.empty(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  const std::vector<Real>& values() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // Value of a single-element tensor.
  Real item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag) { requires_grad_ = flag; }

  bool has_grad() const { return !grad_.empty(); }
  // Allocates a zero gradient on first use.
  std::span<Real> grad();
  std::span<const Real> grad() const { return grad_; }
  void ZeroGrad();
  void ClearGrad() { grad_.clear(); }

  // Reinterprets the shape; element count must match.
  void Reshape(Shape shape);

  // Throws NumericError naming `what` when an element is NaN or Inf.
  void CheckFinite(const std::string& what) const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
  bool requires_grad_ = false;
  std::vector<Real> grad_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

// Converts element type (used to lift float parameters into 64-bit
// verification mode and back).
template <typename To, typename From>
Tensor<To> Cast(const Tensor<From>& in) {
  std::vector<To> out(in.data().begin(), in.data().end());
  return Tensor<To>(in.shape(), std::move(out));
}

// Plain (non-differentiable) vector helpers.
template <typename Real>
Real Dot(std::span<const Real> a, std::span<const Real> b);

template <typename Real>
Real L2Norm(std::span<const Real> v);

// Throws DegenerateInputError when ||v|| <= kNormEpsilon.
template <typename Real>
std::vector<Real> L2Normalized(std::span<const Real> v);

// Throws DimensionError on length mismatch and DegenerateInputError on a
// zero-norm operand.
template <typename Real>
Real CosineSimilarity(std::span<const Real> a, std::span<const Real> b);

}  // namespace stt

#endif  // STT_TENSOR_H_
