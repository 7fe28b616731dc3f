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

#include <vector>

namespace vmrtk {

/// Gradient of a scalar loss with respect to one span's [center, width].
struct SpanGrad {
  double d_center = 0.0;
  double d_width = 0.0;
};

/// Scalar loss plus analytic gradients for each differentiable input block.
/// Blocks a loss does not touch stay empty.
struct LossReport {
  double value = 0.0;
  std::vector<SpanGrad> moment_grads;    // one per predicted span
  std::vector<double> position_grads;    // row-major T x d
  std::vector<double> per_term;          // per-event / per-pair contributions
  bool saturated = false;                // an exponent clamp was hit
};

}  // namespace vmrtk
