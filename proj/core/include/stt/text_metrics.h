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

#ifndef STT_TEXT_METRICS_H_
#define STT_TEXT_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stt::eval {

using Sentence = std::vector<std::string>;
using ReferenceSet = std::vector<Sentence>;

// Whitespace split, no normalization.
Sentence Words(std::string_view text);

// Corpus BLEU@1..max_n: clipped n-gram precision summed over the corpus,
// geometric mean of orders 1..n, brevity penalty exp(1 - r/c) when c < r,
// r taking each candidate's closest reference length (shorter on ties). No
// smoothing, so a zero precision gives 0. Throws ContractError for an empty
// corpus, max_n outside 1..4 or an empty reference set, DimensionError when
// the lists differ in length.
std::vector<double> Bleu(std::span<const Sentence> candidates,
                         std::span<const ReferenceSet> references, std::size_t max_n = 4);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

// Exact unigram matching, aligned left to right: a candidate word continues
// the current chunk when the next reference position matches, otherwise it
// takes the earliest unused matching position.
MeteorAlignment MeteorAlign(const Sentence& candidate, const Sentence& reference);

// Best MeteorAlign score over the references. Throws ContractError for an
// empty candidate, reference set or reference.
double MeteorExact(const Sentence& candidate, std::span<const Sentence> references);

}  // namespace stt::eval

#endif  // STT_TEXT_METRICS_H_
