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

#include "stt/text_metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::eval {

Sentence Words(std::string_view text) {
  std::istringstream in{std::string(text)};
  Sentence out;
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

namespace {

using NgramCounts = std::map<std::span<const std::string>, std::size_t,
                             decltype([](std::span<const std::string> a,
                                         std::span<const std::string> b) {
                               return std::lexicographical_compare(a.begin(), a.end(),
                                                                   b.begin(), b.end());
                             })>;

NgramCounts CountNgrams(const Sentence& s, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::span<const std::string>(s.data() + i, n)];
  }
  return counts;
}

}  // namespace

std::vector<double> Bleu(std::span<const Sentence> candidates,
                         std::span<const ReferenceSet> references, std::size_t max_n) {
  if (candidates.empty()) throw ContractError("BLEU of an empty corpus");
  if (max_n < 1 || max_n > 4) throw ContractError(fmt::format("BLEU order {} not in 1..4", max_n));
  if (candidates.size() != references.size()) {
    throw DimensionError(fmt::format("BLEU: {} candidates, {} reference sets", candidates.size(),
                                     references.size()));
  }

  std::vector<double> matched(max_n, 0.0);
  std::vector<double> total(max_n, 0.0);
  double cand_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const Sentence& cand = candidates[s];
    const ReferenceSet& refs = references[s];
    if (refs.empty()) throw ContractError(fmt::format("BLEU: sentence {} has no references", s));

    std::size_t closest = refs.front().size();
    for (const Sentence& r : refs) {
      const auto diff = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (diff(r.size()) < diff(closest) ||
          (diff(r.size()) == diff(closest) && r.size() < closest)) {
        closest = r.size();
      }
    }
    cand_len += static_cast<double>(cand.size());
    ref_len += static_cast<double>(closest);

    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts cand_counts = CountNgrams(cand, n);
      NgramCounts max_ref;
      for (const Sentence& r : refs) {
        for (const auto& [gram, count] : CountNgrams(r, n)) {
          max_ref[gram] = std::max(max_ref[gram], count);
        }
      }
      for (const auto& [gram, count] : cand_counts) {
        const auto it = max_ref.find(gram);
        if (it != max_ref.end()) matched[n - 1] += static_cast<double>(std::min(count, it->second));
        total[n - 1] += static_cast<double>(count);
      }
    }
  }

  const double bp = cand_len == 0.0      ? 0.0
                    : cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len)
                                         : 1.0;
  std::vector<double> scores(max_n, 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (matched[n - 1] == 0.0) zero = true;
    if (!zero) log_sum += std::log(matched[n - 1] / total[n - 1]);
    scores[n - 1] = zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n));
  }
  return scores;
}

MeteorAlignment MeteorAlign(const Sentence& candidate, const Sentence& reference) {
  MeteorAlignment a;
  std::vector<bool> used(reference.size(), false);
  // Reference position of the previous candidate word, if it matched.
  std::ptrdiff_t prev = -1;
  for (const std::string& word : candidate) {
    std::ptrdiff_t pos = -1;
    if (prev >= 0 && static_cast<std::size_t>(prev + 1) < reference.size() &&
        !used[prev + 1] && reference[prev + 1] == word) {
      pos = prev + 1;
    } else {
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (!used[j] && reference[j] == word) {
          pos = static_cast<std::ptrdiff_t>(j);
          break;
        }
      }
    }
    if (pos >= 0) {
      used[pos] = true;
      ++a.matches;
      if (prev < 0 || pos != prev + 1) ++a.chunks;
    }
    prev = pos;
  }
  if (a.matches == 0) return a;
  const double m = static_cast<double>(a.matches);
  a.precision = m / static_cast<double>(candidate.size());
  a.recall = m / static_cast<double>(reference.size());
  a.fmean = 10.0 * a.precision * a.recall / (a.recall + 9.0 * a.precision);
  a.penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3.0);
  a.score = a.fmean * (1.0 - a.penalty);
  return a;
}

double MeteorExact(const Sentence& candidate, std::span<const Sentence> references) {
  if (candidate.empty()) throw ContractError("METEOR of an empty candidate");
  if (references.empty()) throw ContractError("METEOR without references");
  double best = 0.0;
  for (const Sentence& r : references) {
    if (r.empty()) throw ContractError("METEOR against an empty reference");
    best = std::max(best, MeteorAlign(candidate, r).score);
  }
  return best;
}

}  // namespace stt::eval
