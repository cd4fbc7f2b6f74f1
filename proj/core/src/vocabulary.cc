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

#include "stt/vocabulary.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::data {
namespace {

constexpr std::string_view kReserved[] = {"<pad>", "<start>", "<end>", "<unk>"};

bool IsSeparator(unsigned char c) {
  return c < 0x80 && (std::isspace(c) || std::ispunct(c));
}

}  // namespace

Vocabulary::Vocabulary() {
  for (std::string_view t : kReserved) Append(std::string(t));
}

void Vocabulary::Append(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(std::span<const std::string> texts, std::size_t min_freq) {
  if (min_freq == 0) throw ContractError("build_vocab: min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const std::string& text : texts) {
    for (std::string& w : SplitWords(text)) ++counts[std::move(w)];
  }
  if (counts.empty()) throw ContractError("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, n] : counts) {
    if (n >= min_freq && !std::ranges::count(kReserved, word)) kept.emplace_back(word, n);
  }
  std::ranges::stable_sort(kept, [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_freq_ = min_freq;
  for (auto& [word, n] : kept) vocab.Append(std::move(word));
  return vocab;
}

Vocabulary Vocabulary::Parse(std::string_view text) {
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.ids_.clear();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw FormatError("vocabulary line needs token<TAB>id", line_no);
    }
    const std::string_view id_text = line.substr(tab + 1);
    TokenId id = -1;
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
      throw FormatError(fmt::format("bad id '{}'", id_text), line_no);
    }
    if (id != static_cast<TokenId>(vocab.tokens_.size())) {
      throw FormatError(fmt::format("expected id {}, got {}", vocab.tokens_.size(), id), line_no);
    }
    std::string token(line.substr(0, tab));
    if (static_cast<std::size_t>(id) < kNumReserved && token != kReserved[id]) {
      throw FormatError(fmt::format("reserved id {} must be {}", id, kReserved[id]), line_no);
    }
    if (vocab.ids_.contains(token)) {
      throw FormatError(fmt::format("duplicate token '{}'", token), line_no);
    }
    vocab.Append(std::move(token));
  }
  if (vocab.tokens_.size() < kNumReserved) {
    throw FormatError("vocabulary is missing reserved tokens", line_no);
  }
  return vocab;
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  out << Serialize();
}

TokenId Vocabulary::Id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError(fmt::format("token id {} outside vocabulary of {}", id, tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::Hash() const { return Fnv1a64(Serialize()); }

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsSeparator(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<TokenId> Tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids{Vocabulary::kStart};
  for (const std::string& w : SplitWords(text)) ids.push_back(vocab.Id(w));
  ids.push_back(Vocabulary::kEnd);
  return ids;
}

std::vector<std::string> Detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (id == Vocabulary::kPad || id == Vocabulary::kStart || id == Vocabulary::kEnd) continue;
    words.push_back(vocab.Token(id));
  }
  return words;
}

std::string JoinWords(std::span<const std::string> words) {
  return fmt::format("{}", fmt::join(words, " "));
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace stt::data
