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

#include "stt/report.h"

#include <fstream>

#include <fmt/format.h>

#include "stt/error.h"

namespace stt::eval {

using Json = nlohmann::ordered_json;

namespace {

Json RecallJson(const std::array<double, 3>& r) {
  Json j = Json::object();
  for (std::size_t i = 0; i < kRecallKs.size(); ++i) j[fmt::format("R@{}", kRecallKs[i])] = r[i];
  return j;
}

Json RetrievalJson(const RetrievalMetrics& m) {
  return Json{{"image_to_text", RecallJson(m.image_to_text)},
              {"text_to_image", RecallJson(m.text_to_image)}};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

MetricsReport RetrievalReport(const FoldedRetrieval& folded) {
  MetricsReport report;
  report.task = "retrieval";
  report.retrieval = folded.mean;
  report.folds = folded.folds;
  return report;
}

MetricsReport TextReport(std::string task, const CaptionScores& scores) {
  MetricsReport report;
  report.task = std::move(task);
  report.text = scores;
  return report;
}

Json ToJson(const MetricsReport& report) {
  Json j;
  j["task"] = report.task;
  if (report.retrieval) {
    j["folds"] = report.folds.size();
    const Json mean = RetrievalJson(*report.retrieval);
    j["image_to_text"] = mean["image_to_text"];
    j["text_to_image"] = mean["text_to_image"];
    Json per_fold = Json::array();
    for (const RetrievalMetrics& f : report.folds) per_fold.push_back(RetrievalJson(f));
    j["per_fold"] = std::move(per_fold);
  }
  if (report.text) {
    for (std::size_t n = 0; n < 4; ++n) j[fmt::format("B@{}", n + 1)] = report.text->bleu[n];
    j["METEOR"] = report.text->meteor;
    j["count"] = report.text->count;
  }
  j["metadata"] = report.metadata;
  return j;
}

std::string FormatTable(const MetricsReport& report) {
  std::string out;
  if (report.retrieval) {
    const RetrievalMetrics& m = *report.retrieval;
    out += fmt::format("{:<22}{:>8}{:>8}{:>8}\n", "", "R@1", "R@5", "R@10");
    out += fmt::format("{:<22}{:>8.1f}{:>8.1f}{:>8.1f}\n", "caption retrieval", m.image_to_text[0],
                       m.image_to_text[1], m.image_to_text[2]);
    out += fmt::format("{:<22}{:>8.1f}{:>8.1f}{:>8.1f}\n", "image retrieval", m.text_to_image[0],
                       m.text_to_image[1], m.text_to_image[2]);
    out += fmt::format("({} fold{})\n", report.folds.size(), report.folds.size() == 1 ? "" : "s");
  }
  if (report.text) {
    const CaptionScores& s = *report.text;
    out += fmt::format("{:>8}{:>8}{:>8}{:>8}{:>8}\n", "B@1", "B@2", "B@3", "B@4", "METEOR");
    out += fmt::format("{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}\n", s.bleu[0], s.bleu[1],
                       s.bleu[2], s.bleu[3], s.meteor);
  }
  return out;
}

void WriteReport(const MetricsReport& report, const std::filesystem::path& path) {
  WriteText(path, ToJson(report).dump(2) + "\n");
  auto table = path;
  table.replace_extension(".txt");
  WriteText(table, FormatTable(report));
}

}  // namespace stt::eval
