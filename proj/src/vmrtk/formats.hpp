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

#pragma once

#include <string>
#include <vector>

#include "vmrtk/events.hpp"
#include "vmrtk/metrics.hpp"

namespace vmrtk {

// JSONL, one video per line. Spans travel as [start, end] pairs in seconds:
//   predictions:  {"video_id": ..., "spans": [[s,e],...], "scores": [...]}
//   ground truth: {"video_id": ..., "spans": [[s,e],...]}
//   highlights:   {"video_id": ..., "labels": [...], "scores": [...]}
//   events:       {"video_id": ..., "events": [[s,e],...], "scores": [...]}
// Event lines must satisfy the EventSet partition invariant; their optional
// scores field carries per-boundary diagnostics and is ignored on load.

std::vector<MomentPrediction> load_predictions_jsonl(const std::string& path);
std::vector<MomentGroundTruth> load_ground_truth_jsonl(const std::string& path);
std::vector<HighlightAnnotation> load_highlight_jsonl(const std::string& path);

struct VideoEvents {
  std::string video_id;
  EventSet events;
  std::vector<double> boundary_scores;  // length T-1 when emitted by detect
};

std::vector<VideoEvents> load_events_jsonl(const std::string& path);
void save_events_jsonl(const std::vector<VideoEvents>& videos,
                       const std::string& path);

}  // namespace vmrtk
