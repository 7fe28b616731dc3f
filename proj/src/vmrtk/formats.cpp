// Copyright 2026 The vmrtk Authors.
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

#include "vmrtk/formats.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace vmrtk {

namespace {

using nlohmann::json;

// Calls fn(line_number, parsed_object) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::parse,
           path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object())
      fail(ErrorCode::parse,
           path + ":" + std::to_string(line_no) + ": expected a JSON object");
    fn(line_no, j);
    any = true;
  }
  if (!any) fail(ErrorCode::parse, path + ": no records");
}

std::string context(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

std::string get_video_id(const json& j, const std::string& ctx) {
  if (!j.contains("video_id") || !j["video_id"].is_string())
    fail(ErrorCode::parse, ctx + "missing string field 'video_id'");
  return j["video_id"].get<std::string>();
}

std::vector<Span> get_spans(const json& j, const char* key,
                            const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_array())
    fail(ErrorCode::parse, ctx + "missing array field '" + key + "'");
  std::vector<Span> out;
  for (const auto& e : j[key]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
        !e[1].is_number())
      fail(ErrorCode::parse,
           ctx + "'" + key + "' entries must be [start, end] number pairs");
    const double s = e[0].get<double>(), t = e[1].get<double>();
    if (!std::isfinite(s) || !std::isfinite(t) || s > t)
      fail(ErrorCode::parse,
           ctx + "invalid interval [" + std::to_string(s) + ", " +
               std::to_string(t) + "]");
    out.push_back(span_from_interval(s, t));
  }
  return out;
}

std::vector<double> get_numbers(const json& j, const char* key,
                                const std::string& ctx, bool required) {
  if (!j.contains(key)) {
    if (required)
      fail(ErrorCode::parse, ctx + "missing array field '" + key + "'");
    return {};
  }
  if (!j[key].is_array())
    fail(ErrorCode::parse, ctx + "'" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : j[key]) {
    if (!e.is_number())
      fail(ErrorCode::parse, ctx + "'" + key + "' entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

std::vector<MomentPrediction> load_predictions_jsonl(const std::string& path) {
  std::vector<MomentPrediction> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    const std::string ctx = context(path, line_no);
    MomentPrediction p;
    p.video_id = get_video_id(j, ctx);
    p.spans = get_spans(j, "spans", ctx);
    p.scores = get_numbers(j, "scores", ctx, true);
    if (p.scores.size() != p.spans.size())
      fail(ErrorCode::parse, ctx + "spans and scores differ in length");
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<MomentGroundTruth> load_ground_truth_jsonl(
    const std::string& path) {
  std::vector<MomentGroundTruth> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    const std::string ctx = context(path, line_no);
    MomentGroundTruth g;
    g.video_id = get_video_id(j, ctx);
    g.spans = get_spans(j, "spans", ctx);
    out.push_back(std::move(g));
  });
  return out;
}

std::vector<HighlightAnnotation> load_highlight_jsonl(const std::string& path) {
  std::vector<HighlightAnnotation> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    const std::string ctx = context(path, line_no);
    HighlightAnnotation a;
    a.video_id = get_video_id(j, ctx);
    if (!j.contains("labels") || !j["labels"].is_array())
      fail(ErrorCode::parse, ctx + "missing array field 'labels'");
    for (const auto& e : j["labels"]) {
      if (!e.is_number_integer())
        fail(ErrorCode::parse, ctx + "labels must be integers");
      a.labels.push_back(e.get<int>());
    }
    a.scores = get_numbers(j, "scores", ctx, true);
    if (a.labels.size() != a.scores.size())
      fail(ErrorCode::parse, ctx + "labels and scores differ in length");
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<VideoEvents> load_events_jsonl(const std::string& path) {
  std::vector<VideoEvents> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& j) {
    const std::string ctx = context(path, line_no);
    VideoEvents v;
    v.video_id = get_video_id(j, ctx);
    v.events.events = get_spans(j, "events", ctx);
    if (v.events.events.empty())
      fail(ErrorCode::parse, ctx + "'events' must not be empty");
    v.events.horizon = v.events.events.back().end();
    v.boundary_scores = get_numbers(j, "scores", ctx, false);
    try {
      validate_event_set(v.events);
    } catch (const Error& e) {
      fail(ErrorCode::parse, ctx + e.what());
    }
    out.push_back(std::move(v));
  });
  return out;
}

void save_events_jsonl(const std::vector<VideoEvents>& videos,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  for (const VideoEvents& v : videos) {
    nlohmann::ordered_json j;
    j["video_id"] = v.video_id;
    auto events = json::array();
    for (const Span& e : v.events.events)
      events.push_back({e.start(), e.end()});
    j["events"] = std::move(events);
    j["scores"] = v.boundary_scores;
    out << j.dump() << "\n";
  }
  if (!out) fail(ErrorCode::io, "failed writing " + path);
}

}  // namespace vmrtk
