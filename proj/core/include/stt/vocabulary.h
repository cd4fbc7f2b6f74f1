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

#ifndef STT_VOCABULARY_H_
#define STT_VOCABULARY_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stt::data {

using TokenId = std::int32_t;

// Token <-> id bijection with four reserved ids.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kStart = 1;
  static constexpr TokenId kEnd = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumReserved = 4;

  // Reserved tokens only.
  Vocabulary();

  // Keeps words whose corpus frequency is >= min_freq. Ids are assigned by
  // descending frequency, ties broken lexicographically. Throws
  // ContractError on an empty corpus or min_freq == 0.
  static Vocabulary Build(std::span<const std::string> texts, std::size_t min_freq);

  // Parses "token<TAB>id" lines; reserved tokens must come first with
  // their fixed ids and ids must be dense.
  static Vocabulary Parse(std::string_view text);
  static Vocabulary Load(const std::filesystem::path& path);
  std::string Serialize() const;
  void Save(const std::filesystem::path& path) const;

  // kUnk for unknown tokens.
  TokenId Id(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string& Token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  std::size_t min_freq() const { return min_freq_; }

  // FNV-1a 64 of Serialize(); identifies the vocabulary in checkpoints.
  std::uint64_t Hash() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void Append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::size_t min_freq_ = 1;
};

// Lowercases ASCII and splits on whitespace and ASCII punctuation;
// punctuation is dropped.
std::vector<std::string> SplitWords(std::string_view text);

// <start> words... <end>, unknown words mapped to <unk>.
std::vector<TokenId> Tokenize(std::string_view text, const Vocabulary& vocab);

// Inverse of Tokenize for in-vocabulary words; reserved markers
// (<pad>/<start>/<end>) are dropped.
std::vector<std::string> Detokenize(std::span<const TokenId> ids, const Vocabulary& vocab);
std::string JoinWords(std::span<const std::string> words);

std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace stt::data

#endif  // STT_VOCABULARY_H_
