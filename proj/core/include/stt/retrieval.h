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

#ifndef STT_RETRIEVAL_H_
#define STT_RETRIEVAL_H_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "stt/model.h"
#include "stt/tensor.h"

namespace stt::eval {

enum class Direction { kImageToText, kTextToImage };

std::string_view ToString(Direction direction);

// Scores s(i, c) for every image row and caption column. column_owner[c] is
// the row index of the image caption c belongs to; every image owns at least
// one column.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  // Throws DimensionError on size mismatch, ContractError on an owner out of
  // range, an image without captions or a non-finite score.
  SimilarityMatrix(std::size_t images, std::vector<double> values,
                   std::vector<std::size_t> column_owner);

  std::size_t images() const { return images_; }
  std::size_t captions() const { return owner_.size(); }
  double at(std::size_t image, std::size_t caption) const {
    return values_[image * captions() + caption];
  }
  std::span<const double> row(std::size_t image) const {
    return {values_.data() + image * captions(), captions()};
  }
  std::size_t owner(std::size_t caption) const { return owner_[caption]; }
  std::span<const std::size_t> column_owner() const { return owner_; }
  // Caption columns of each image, ascending.
  std::vector<std::vector<std::size_t>> GroundTruth() const;

  // Images [begin, end) and only the captions they own, columns kept in
  // their original order.
  SimilarityMatrix Restrict(std::size_t begin, std::size_t end) const;

 private:
  std::size_t images_ = 0;
  std::vector<double> values_;
  std::vector<std::size_t> owner_;
};

// Dot products of [N x D] image and [M x D] caption embeddings (cosines for
// unit rows). Throws DimensionError when D differs.
SimilarityMatrix GlobalSimilarityMatrix(const Tensor<double>& images,
                                        const Tensor<double>& captions,
                                        std::vector<std::size_t> column_owner);

// Entry (i, c) = attention similarity of regions[i] and words[c].
SimilarityMatrix AttentionSimilarityMatrix(std::span<const Tensor<double>> regions,
                                           std::span<const Tensor<double>> words,
                                           std::vector<std::size_t> column_owner,
                                           const model::AttentionOptions& options);

// Percent of queries with a ground-truth candidate among the top K. Image
// queries rank caption columns, caption queries rank image rows; ties go to
// the lower index. Throws ContractError unless 1 <= K <= candidate count.
double RecallAtK(const SimilarityMatrix& sim, Direction direction, std::size_t k);

inline constexpr std::array<std::size_t, 3> kRecallKs = {1, 5, 10};

struct RetrievalMetrics {
  std::array<double, 3> image_to_text{};  // R@1, R@5, R@10
  std::array<double, 3> text_to_image{};

  bool operator==(const RetrievalMetrics&) const = default;
};

// R@1/5/10 in both directions; a K above the candidate count is evaluated
// at the candidate count.
RetrievalMetrics EvaluateRetrieval(const SimilarityMatrix& sim);

struct FoldedRetrieval {
  std::vector<RetrievalMetrics> folds;
  RetrievalMetrics mean;
};

// Contiguous image folds, each restricted to its own captions, averaged.
// Throws ContractError when the image count does not split evenly.
FoldedRetrieval EvaluateFolds(const SimilarityMatrix& sim, std::size_t folds);

RetrievalMetrics MeanMetrics(std::span<const RetrievalMetrics> metrics);

}  // namespace stt::eval

#endif  // STT_RETRIEVAL_H_
