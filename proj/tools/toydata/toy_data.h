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

#ifndef STT_TOYDATA_TOY_DATA_H_
#define STT_TOYDATA_TOY_DATA_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stt/feature_store.h"
#include "stt/samples.h"

namespace stt::toy {

// Image ids are first_id, first_id + 1, ...; values uniform in [-1, 1).
data::FeatureStore RandomFeatures(std::size_t images, std::size_t regions, std::size_t dim,
                                  std::uint64_t seed, std::uint64_t first_id = 1);

inline constexpr std::size_t kMaxCaptionsPerImage = 8;

// 22-word templated captions. Images differ in most slots; the captions of
// one image differ only in a single verb, so a decoder conditioned on the
// image can predict every other word.
std::vector<data::CaptionRecord> TemplateCaptions(std::size_t images,
                                                  std::size_t captions_per_image,
                                                  std::uint64_t first_id = 1);

}  // namespace stt::toy

#endif  // STT_TOYDATA_TOY_DATA_H_
