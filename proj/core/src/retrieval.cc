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

#include "stt/retrieval.h"

#include <cmath>

#include <fmt/format.h>

#include "stt/error.h"
#include "stt/parallel.h"

namespace stt::eval {

std::string_view ToString(Direction direction) {
  return direction == Direction::kImageToText ? "image_to_text" : "text_to_image";
}

SimilarityMatrix::SimilarityMatrix(std::size_t images, std::vector<double> values,
                                   std::vector<std::size_t> column_owner)
    : images_(images), values_(std::move(values)), owner_(std::move(column_owner)) {
  if (values_.size() != images_ * owner_.size()) {
    throw DimensionError(fmt::format("similarity matrix: {} values for {} x {}", values_.size(),
                                     images_, owner_.size()));
  }
  std::vector<bool> owns(images_, false);
  for (std::size_t c = 0; c < owner_.size(); ++c) {
    if (owner_[c] >= images_) {
      throw ContractError(fmt::format("caption column {} owned by image row {} of {}", c,
                                      owner_[c], images_));
    }
    owns[owner_[c]] = true;
  }
  for (std::size_t i = 0; i < images_; ++i) {
    if (!owns[i]) throw ContractError(fmt::format("image row {} has no caption column", i));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("similarity matrix has a non-finite score");
  }
}

std::vector<std::vector<std::size_t>> SimilarityMatrix::GroundTruth() const {
  std::vector<std::vector<std::size_t>> gt(images_);
  for (std::size_t c = 0; c < owner_.size(); ++c) gt[owner_[c]].push_back(c);
  return gt;
}

SimilarityMatrix SimilarityMatrix::Restrict(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > images_) {
    throw ContractError(fmt::format("bad image range [{}, {}) of {}", begin, end, images_));
  }
  std::vector<std::size_t> columns;
  std::vector<std::size_t> owners;
  for (std::size_t c = 0; c < owner_.size(); ++c) {
    if (owner_[c] >= begin && owner_[c] < end) {
      columns.push_back(c);
      owners.push_back(owner_[c] - begin);
    }
  }
  std::vector<double> values;
  values.reserve((end - begin) * columns.size());
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t c : columns) values.push_back(at(i, c));
  }
  return SimilarityMatrix(end - begin, std::move(values), std::move(owners));
}

SimilarityMatrix GlobalSimilarityMatrix(const Tensor<double>& images,
                                        const Tensor<double>& captions,
                                        std::vector<std::size_t> column_owner) {
  if (images.rank() != 2 || captions.rank() != 2 || images.cols() != captions.cols()) {
    throw DimensionError(fmt::format("similarity of {} images with {} captions",
                                     ShapeString(images.shape()),
                                     ShapeString(captions.shape())));
  }
  const std::size_t n = images.rows();
  const std::size_t m = captions.rows();
  const std::size_t d = images.cols();
  std::vector<double> values(n * m);
  ParallelFor(n, [&](std::size_t i) {
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += images.at(i, k) * captions.at(c, k);
      values[i * m + c] = s;
    }
  });
  return SimilarityMatrix(n, std::move(values), std::move(column_owner));
}

SimilarityMatrix AttentionSimilarityMatrix(std::span<const Tensor<double>> regions,
                                           std::span<const Tensor<double>> words,
                                           std::vector<std::size_t> column_owner,
                                           const model::AttentionOptions& options) {
  const std::size_t n = regions.size();
  const std::size_t m = words.size();
  std::vector<double> values(n * m);
  ParallelFor(n, [&](std::size_t i) {
    for (std::size_t c = 0; c < m; ++c) {
      values[i * m + c] = model::AttentionSimilarity(regions[i], words[c], options);
    }
  });
  return SimilarityMatrix(n, std::move(values), std::move(column_owner));
}

namespace {

// 1-based rank of the best-placed relevant candidate among `scores`, ties
// resolved toward the lower index.
std::size_t BestRank(std::span<const double> scores, std::span<const std::size_t> relevant) {
  std::size_t best = scores.size();
  for (std::size_t r : relevant) {
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > scores[r] || (scores[j] == scores[r] && j < r)) ++ahead;
    }
    best = std::min(best, ahead + 1);
  }
  return best;
}

}  // namespace

double RecallAtK(const SimilarityMatrix& sim, Direction direction, std::size_t k) {
  const bool image_query = direction == Direction::kImageToText;
  const std::size_t candidates = image_query ? sim.captions() : sim.images();
  const std::size_t queries = image_query ? sim.images() : sim.captions();
  if (k < 1 || k > candidates) {
    throw ContractError(fmt::format("R@{} out of range for {} candidates", k, candidates));
  }
  if (queries == 0) throw ContractError("recall on an empty similarity matrix");

  std::size_t hits = 0;
  if (image_query) {
    const auto gt = sim.GroundTruth();
    for (std::size_t i = 0; i < sim.images(); ++i) {
      if (BestRank(sim.row(i), gt[i]) <= k) ++hits;
    }
  } else {
    std::vector<double> column(sim.images());
    for (std::size_t c = 0; c < sim.captions(); ++c) {
      for (std::size_t i = 0; i < sim.images(); ++i) column[i] = sim.at(i, c);
      const std::size_t owner = sim.owner(c);
      if (BestRank(column, std::span(&owner, 1)) <= k) ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(queries);
}

RetrievalMetrics EvaluateRetrieval(const SimilarityMatrix& sim) {
  RetrievalMetrics out;
  for (std::size_t j = 0; j < kRecallKs.size(); ++j) {
    out.image_to_text[j] =
        RecallAtK(sim, Direction::kImageToText, std::min(kRecallKs[j], sim.captions()));
    out.text_to_image[j] =
        RecallAtK(sim, Direction::kTextToImage, std::min(kRecallKs[j], sim.images()));
  }
  return out;
}

RetrievalMetrics MeanMetrics(std::span<const RetrievalMetrics> metrics) {
  if (metrics.empty()) throw ContractError("mean of zero metric sets");
  RetrievalMetrics mean;
  for (const RetrievalMetrics& m : metrics) {
    for (std::size_t j = 0; j < kRecallKs.size(); ++j) {
      mean.image_to_text[j] += m.image_to_text[j];
      mean.text_to_image[j] += m.text_to_image[j];
    }
  }
  const double n = static_cast<double>(metrics.size());
  for (std::size_t j = 0; j < kRecallKs.size(); ++j) {
    mean.image_to_text[j] /= n;
    mean.text_to_image[j] /= n;
  }
  return mean;
}

FoldedRetrieval EvaluateFolds(const SimilarityMatrix& sim, std::size_t folds) {
  if (folds == 0 || sim.images() == 0 || sim.images() % folds != 0) {
    throw ContractError(fmt::format("{} images cannot be split into {} equal folds",
                                    sim.images(), folds));
  }
  const std::size_t size = sim.images() / folds;
  FoldedRetrieval out;
  out.folds.resize(folds);
  ParallelFor(folds, [&](std::size_t f) {
    out.folds[f] = EvaluateRetrieval(sim.Restrict(f * size, (f + 1) * size));
  });
  out.mean = MeanMetrics(out.folds);
  return out;
}

}  // namespace stt::eval
