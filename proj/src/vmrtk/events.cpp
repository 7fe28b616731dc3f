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

#include "vmrtk/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vmrtk {

void validate_frame_features(const FrameFeatures& f) {
  if (f.features.rows < 1)
    fail(ErrorCode::invalid_argument, "frame features need at least one frame");
  if (f.features.cols < 1)
    fail(ErrorCode::invalid_argument, "frame features need at least one dimension");
  if (!(f.frame_period > 0.0) || !std::isfinite(f.frame_period))
    fail(ErrorCode::invalid_argument, "frame_period must be a positive real");
  for (std::size_t i = 0; i < f.features.rows; ++i)
    for (std::size_t j = 0; j < f.features.cols; ++j)
      if (!std::isfinite(f.features.at(i, j)))
        fail(ErrorCode::invalid_argument,
             "non-finite feature at frame " + std::to_string(i));
}

void validate_event_set(const EventSet& es) {
  if (es.events.empty())
    fail(ErrorCode::invalid_argument, "event set has no events");
  if (!(es.horizon > 0.0) || !std::isfinite(es.horizon))
    fail(ErrorCode::invalid_argument, "event set horizon must be positive");
  const double tol = 1e-9 * std::max(1.0, es.horizon);
  double cursor = 0.0;
  for (std::size_t i = 0; i < es.events.size(); ++i) {
    const Span& e = es.events[i];
    if (!(e.width >= 0.0) || !std::isfinite(e.center) || !std::isfinite(e.width))
      fail(ErrorCode::invalid_argument,
           "event " + std::to_string(i) + " is not a valid span");
    if (std::abs(e.start() - cursor) > tol)
      fail(ErrorCode::invalid_argument,
           "event " + std::to_string(i) + " does not start where the previous one ends");
    cursor = e.end();
  }
  if (std::abs(cursor - es.horizon) > tol)
    fail(ErrorCode::invalid_argument, "events do not cover the full horizon");
}

Matrix tsm(const FrameFeatures& f) {
  validate_frame_features(f);
  const std::size_t t = f.features.rows, d = f.features.cols;
  std::vector<double> norms(t);
  for (std::size_t i = 0; i < t; ++i) {
    norms[i] = l2_norm(f.features.row(i), d);
    if (norms[i] == 0.0)
      fail(ErrorCode::invalid_argument,
           "zero-norm feature at frame " + std::to_string(i));
  }
  Matrix out(t, t);
  for (std::size_t i = 0; i < t; ++i) {
    out.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < t; ++j) {
      const double c = dot(f.features.row(i), f.features.row(j), d) /
                       (norms[i] * norms[j]);
      const double clamped = std::clamp(c, -1.0, 1.0);
      out.at(i, j) = clamped;
      out.at(j, i) = clamped;
    }
  }
  return out;
}

std::vector<double> boundary_scores(const Matrix& sim, int kernel_half) {
  if (sim.rows != sim.cols)
    fail(ErrorCode::invalid_argument, "similarity matrix must be square");
  if (kernel_half < 1)
    fail(ErrorCode::invalid_argument, "kernel_half must be >= 1");
  const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(sim.rows);
  const std::ptrdiff_t h = kernel_half;
  std::vector<double> scores;
  if (t < 2) return scores;
  scores.resize(static_cast<std::size_t>(t - 1));
  for (std::ptrdiff_t b = 0; b + 1 < t; ++b) {
    const std::ptrdiff_t a_lo = std::max<std::ptrdiff_t>(0, b - h + 1);
    const std::ptrdiff_t a_hi = b;           // inclusive
    const std::ptrdiff_t b_lo = b + 1;
    const std::ptrdiff_t b_hi = std::min(t - 1, b + h);  // inclusive
    double within = 0.0;
    std::size_t n_within = 0;
    for (std::ptrdiff_t i = a_lo; i <= a_hi; ++i)
      for (std::ptrdiff_t j = a_lo; j <= a_hi; ++j) {
        within += sim.at(i, j);
        ++n_within;
      }
    for (std::ptrdiff_t i = b_lo; i <= b_hi; ++i)
      for (std::ptrdiff_t j = b_lo; j <= b_hi; ++j) {
        within += sim.at(i, j);
        ++n_within;
      }
    double cross = 0.0;
    std::size_t n_cross = 0;
    for (std::ptrdiff_t i = a_lo; i <= a_hi; ++i)
      for (std::ptrdiff_t j = b_lo; j <= b_hi; ++j) {
        cross += sim.at(i, j);
        ++n_cross;
      }
    scores[static_cast<std::size_t>(b)] =
        within / static_cast<double>(n_within) -
        cross / static_cast<double>(n_cross);
  }
  return scores;
}

namespace {

Matrix slice_square(const Matrix& sim, std::size_t lo, std::size_t hi) {
  Matrix out(hi - lo, hi - lo);
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = lo; j < hi; ++j) out.at(i - lo, j - lo) = sim.at(i, j);
  return out;
}

// Splits [lo, hi) (frame indices) at the best admissible boundary, appending
// the resulting leaf segments to out in order. Scores are recomputed on the
// segment's own sub-matrix so windows never reach across an already-decided
// boundary.
void bisect(const Matrix& sim, std::size_t lo, std::size_t hi, int depth,
            const DetectorConfig& cfg,
            std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const std::size_t min_len = static_cast<std::size_t>(cfg.min_event_len);
  bool split = false;
  std::size_t best_t = 0;
  if (depth < cfg.max_depth && hi - lo >= 2 * min_len) {
    const std::vector<double> scores =
        boundary_scores(slice_square(sim, lo, hi), cfg.kernel_half);
    double best = -std::numeric_limits<double>::infinity();
    // boundary after frame t keeps [lo, t+1) and [t+1, hi)
    for (std::size_t t = lo + min_len - 1; t + min_len < hi; ++t) {
      if (scores[t - lo] > best) {
        best = scores[t - lo];
        best_t = t;
      }
    }
    split = best > cfg.score_threshold;
  }
  if (split) {
    bisect(sim, lo, best_t + 1, depth + 1, cfg, out);
    bisect(sim, best_t + 1, hi, depth + 1, cfg, out);
  } else {
    out.emplace_back(lo, hi);
  }
}

}  // namespace

EventSet detect_events(const FrameFeatures& f, const DetectorConfig& cfg) {
  if (cfg.kernel_half < 1 || cfg.min_event_len < 2 || cfg.max_depth < 1)
    fail(ErrorCode::invalid_argument, "detector config out of range");
  const Matrix sim = tsm(f);
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  bisect(sim, 0, f.features.rows, 0, cfg, segments);

  EventSet out;
  out.horizon = static_cast<double>(f.features.rows) * f.frame_period;
  for (const auto& [lo, hi] : segments)
    out.events.push_back(span_from_interval(
        static_cast<double>(lo) * f.frame_period,
        static_cast<double>(hi) * f.frame_period));
  validate_event_set(out);
  return out;
}

std::pair<std::size_t, std::size_t> event_frame_range(const Span& event,
                                                      double frame_period,
                                                      std::size_t frame_count) {
  if (!(frame_period > 0.0))
    fail(ErrorCode::invalid_argument, "frame_period must be positive");
  const long long first = std::llround(event.start() / frame_period);
  const long long last_ex = std::llround(event.end() / frame_period);
  if (last_ex - first < 1)
    fail(ErrorCode::invalid_argument,
         "event [" + std::to_string(event.start()) + ", " +
             std::to_string(event.end()) + ") is shorter than one frame");
  if (first < 0 || last_ex > static_cast<long long>(frame_count))
    fail(ErrorCode::invalid_argument,
         "event frame range [" + std::to_string(first) + ", " +
             std::to_string(last_ex) + ") falls outside [0, " +
             std::to_string(frame_count) + ")");
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last_ex)};
}

}  // namespace vmrtk
