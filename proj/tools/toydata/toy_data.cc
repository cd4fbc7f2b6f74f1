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

#include "toy_data.h"

#include <array>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::toy {

namespace {

using Words = std::array<std::string_view, 8>;

constexpr Words kSizes = {"small", "large", "tiny", "big", "young", "old", "tall", "short"};
constexpr Words kColors = {"brown", "white", "black", "grey", "red", "golden", "spotted", "striped"};
constexpr Words kAnimals = {"dog", "cat", "horse", "cow", "sheep", "goat", "bear", "fox"};
constexpr Words kActions = {"running", "walking", "jumping", "trotting",
                            "racing",  "strolling", "leaping", "dashing"};
constexpr Words kPlaces = {"field", "park", "beach", "yard", "road", "meadow", "bridge", "garden"};
constexpr Words kObjects = {"ball", "kite", "bike", "car", "boat", "chair", "box", "bag"};
constexpr Words kThings = {"tree", "fence", "house", "wall", "river", "lake", "hill", "gate"};
constexpr Words kSkies = {"blue", "pale", "cloudy", "clear", "dark", "bright", "grey", "sunny"};
constexpr Words kVerbs = {"rests", "sits", "lies", "waits", "stays", "stands", "hides", "floats"};

// Mixed radix digits of i so that nearby images disagree in several slots.
std::string_view Pick(const Words& words, std::size_t i, std::size_t salt) {
  return words[(i + salt * (i / 8 + 1)) % words.size()];
}

}  // namespace

data::FeatureStore RandomFeatures(std::size_t images, std::size_t regions, std::size_t dim,
                                  std::uint64_t seed, std::uint64_t first_id) {
  std::mt19937_64 rng(seed);
  data::FeatureStore store(regions, dim);
  std::vector<float> values(regions * dim);
  for (std::size_t i = 0; i < images; ++i) {
    for (float& v : values) {
      v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0);
    }
    store.Add(first_id + i, values);
  }
  return store;
}

std::vector<data::CaptionRecord> TemplateCaptions(std::size_t images,
                                                  std::size_t captions_per_image,
                                                  std::uint64_t first_id) {
  if (captions_per_image == 0 || captions_per_image > kMaxCaptionsPerImage) {
    throw ContractError(fmt::format("template captions: {} per image not in 1..{}",
                                    captions_per_image, kMaxCaptionsPerImage));
  }
  std::vector<data::CaptionRecord> out;
  for (std::size_t i = 0; i < images; ++i) {
    for (std::size_t k = 0; k < captions_per_image; ++k) {
      out.push_back(
          {first_id + i,
           fmt::format("a {} {} {} is {} across the {} while a {} {} {} near the {} under the "
                       "{} sky today",
                       Pick(kSizes, i, 0), Pick(kColors, i, 1), Pick(kAnimals, i, 2),
                       Pick(kActions, i, 3), Pick(kPlaces, i, 5), Pick(kColors, i, 4),
                       Pick(kObjects, i, 6), kVerbs[k], Pick(kThings, i, 7),
                       Pick(kSkies, i, 3))});
    }
  }
  return out;
}

}  // namespace stt::toy
