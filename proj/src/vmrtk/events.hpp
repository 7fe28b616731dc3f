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

#include "vmrtk/common.hpp"
#include "vmrtk/span.hpp"

namespace vmrtk {

/// Per-frame feature rows for one video, plus the seconds-per-frame scale
/// used to convert frame indices to span times.
struct FrameFeatures {
  std::string video_id;
  Matrix features;  // T x D
  double frame_period = 1.0;
};

void validate_frame_features(const FrameFeatures& f);

/// Ordered, contiguous partition of [0, horizon] into event spans.
struct EventSet {
  std::vector<Span> events;
  double horizon = 0.0;
};

/// Throws unless the events are sorted, non-overlapping, contiguous, start at
/// 0, and end at horizon. Tolerance scales with the horizon.
void validate_event_set(const EventSet& es);

struct DetectorConfig {
  int kernel_half = 4;
  int min_event_len = 2;  // frames
  double score_threshold = 0.05;
  int max_depth = 8;
};

/// T x T matrix of pairwise frame cosine similarities (unit diagonal,
/// symmetric, entries clamped into [-1, 1]). Errors on zero-norm frames.
Matrix tsm(const FrameFeatures& f);

/// Contrastive boundary scores, length T-1; scores[t] rates the boundary
/// between frames t and t+1. Within a window of kernel_half frames per side
/// (clipped at the edges), the score is the mean similarity inside the two
/// flanking diagonal blocks minus the mean similarity across them.
std::vector<double> boundary_scores(const Matrix& sim, int kernel_half);

/// Recursive bisection: within a segment, scores are computed on the
/// segment's own sub-matrix, and the highest-scoring boundary that leaves at
/// least min_event_len frames on each side splits the segment when its score
/// exceeds score_threshold and the depth budget allows; ties go to the
/// earliest boundary. The result always partitions [0, T*frame_period].
EventSet detect_events(const FrameFeatures& f, const DetectorConfig& cfg = {});

/// Frame-index range [first, last_exclusive) covered by an event span, using
/// nearest-integer snapping of span endpoints divided by frame_period.
/// Errors when the snapped range is empty (shorter than one frame) or falls
/// outside [0, frame_count).
std::pair<std::size_t, std::size_t> event_frame_range(const Span& event,
                                                      double frame_period,
                                                      std::size_t frame_count);

}  // namespace vmrtk
