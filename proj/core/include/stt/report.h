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

#ifndef STT_REPORT_H_
#define STT_REPORT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stt/retrieval.h"
#include "stt/tasks.h"

namespace stt::eval {

struct MetricsReport {
  std::string task;  // "retrieval", "caption" or "paraphrase"
  std::optional<RetrievalMetrics> retrieval;
  std::vector<RetrievalMetrics> folds;
  std::optional<CaptionScores> text;
  // Run metadata copied verbatim into the JSON document.
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

MetricsReport RetrievalReport(const FoldedRetrieval& folded);
MetricsReport TextReport(std::string task, const CaptionScores& scores);

nlohmann::ordered_json ToJson(const MetricsReport& report);
std::string FormatTable(const MetricsReport& report);

// Writes <path> (JSON) and the table next to it with extension .txt.
void WriteReport(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace stt::eval

#endif  // STT_REPORT_H_
