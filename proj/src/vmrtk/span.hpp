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

#include <utility>

#include "vmrtk/common.hpp"

namespace vmrtk {

/// Temporal segment in center/width form. Units (seconds or normalized) are
/// the caller's business; they only need to be consistent per call.
struct Span {
  double center = 0.0;
  double width = 0.0;

  double start() const { return center - width / 2.0; }
  double end() const { return center + width / 2.0; }

  bool operator==(const Span&) const = default;
};

inline Span span_from_interval(double start, double end) {
  if (!(start <= end))
    fail(ErrorCode::invalid_argument, "span interval has start > end");
  return Span{(start + end) / 2.0, end - start};
}

inline std::pair<double, double> span_to_interval(const Span& s) {
  return {s.start(), s.end()};
}

/// Intersection-over-union of two 1-D spans, in [0, 1].
/// Point-span conventions: two identical point spans have iou 1, two distinct
/// ones 0. Untrained predictors emit such spans, so they must be legal.
double iou(const Span& a, const Span& b);

/// Generalized IoU in (-1, 1]: iou minus the dead fraction of the enclosing
/// hull. Equals iou whenever the spans overlap or touch; two identical point
/// spans give 1.
double giou(const Span& a, const Span& b);

/// Gradient of giou(a, b) with respect to a's center and width, with b held
/// fixed. Piecewise smooth; at kinks (endpoint ties, touching spans) this
/// returns a one-sided value. branch_id distinguishes the smooth pieces so a
/// finite-difference checker can skip straddling points.
struct GiouGrad {
  double value = 0.0;
  double d_center = 0.0;
  double d_width = 0.0;
  unsigned branch_id = 0;
};
GiouGrad giou_gradient(const Span& a, const Span& b);

}  // namespace vmrtk
