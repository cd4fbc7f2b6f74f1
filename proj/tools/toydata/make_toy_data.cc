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

// Writes seeded synthetic features and templated captions.

#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "toy_data.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic STTF features and caption jsonl", "stt-toydata"};
  std::size_t images = 8, per_image = 5, dim = 64, regions = 1;
  std::uint64_t seed = 7, first_id = 1;
  std::string features, captions;
  app.add_option("--images", images)->capture_default_str();
  app.add_option("--captions-per-image", per_image)->capture_default_str();
  app.add_option("--dim", dim)->capture_default_str();
  app.add_option("--regions", regions)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--first-id", first_id)->capture_default_str();
  app.add_option("--features", features, "Output STTF path")->required();
  app.add_option("--captions", captions, "Output jsonl path")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    stt::data::WriteFeatureFile(stt::toy::RandomFeatures(images, regions, dim, seed, first_id),
                                features);
    stt::data::WriteCaptionFile(stt::toy::TemplateCaptions(images, per_image, first_id), captions);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
