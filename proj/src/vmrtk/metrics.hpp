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

#include <map>
#include <string>
#include <vector>

#include "vmrtk/span.hpp"

namespace vmrtk {

/// Ranked retrieval output for one video. Rankings follow descending score
/// with ties kept in input order (evaluation sorts stably, so pre-sorted
/// input passes through unchanged).
struct MomentPrediction {
  std::string video_id;
  std::vector<Span> spans;
  std::vector<double> scores;
};

struct MomentGroundTruth {
  std::string video_id;
  std::vector<Span> spans;
};

/// Per-clip saliency labels (0..4, 4 = highest) and predicted scores for one
/// video.
struct HighlightAnnotation {
  std::string video_id;
  std::vector<int> labels;
  std::vector<double> scores;
};

/// The ten standard IoU thresholds 0.5, 0.55, ..., 0.95.
std::vector<double> standard_iou_thresholds();

/// Fraction of ground-truth videos whose top-scored prediction reaches the
/// IoU threshold against any of that video's spans. Videos without
/// predictions count as misses; predictions for unknown videos are an error.
std::map<double, double> recall_at_1(
    const std::vector<MomentPrediction>& preds,
    const std::vector<MomentGroundTruth>& gts,
    const std::vector<double>& thresholds);

struct MapResult {
  std::map<double, double> per_threshold;
  double average = 0.0;
};

/// Mean (over videos) average precision per IoU threshold, plus the mean over
/// the given thresholds. Within a video, predictions are walked in rank
/// order; each is a true positive when it clears the threshold against a
/// still-unmatched span (greedy, highest IoU first, earliest span on ties).
/// AP integrates the precision envelope over all ranks.
MapResult mean_average_precision(const std::vector<MomentPrediction>& preds,
                                 const std::vector<MomentGroundTruth>& gts,
                                 const std::vector<double>& thresholds);

struct HighlightResult {
  double hd_map = 0.0;
  double hit_at_1 = 0.0;
  std::size_t n_videos = 0;    // videos included in the means
  std::size_t n_excluded = 0;  // videos without any label-4 clip
};

/// Positives are clips labeled 4. Per included video: AP of the score ranking
/// against the positive set and whether the top-scored clip is positive.
/// Videos with no positives are excluded from both means; if every video
/// lacks positives that is an error.
HighlightResult highlight_metrics(
    const std::vector<HighlightAnnotation>& anns);

struct MrReport {
  std::map<double, double> r1;
  std::map<double, double> map_at;
  double map_avg = 0.0;
  std::size_t n_videos = 0;
};

/// recall_at_1 at 0.5/0.7 plus mAP over the standard threshold range.
MrReport evaluate_mr(const std::vector<MomentPrediction>& preds,
                     const std::vector<MomentGroundTruth>& gts);

}  // namespace vmrtk
