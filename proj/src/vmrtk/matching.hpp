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

// Optimal one-to-one assignment and the DETR-style moment set loss built on
// top of it.

#include <cstdint>
#include <utility>
#include <vector>

#include "vmrtk/common.hpp"
#include "vmrtk/loss_report.hpp"
#include "vmrtk/span.hpp"

namespace vmrtk {

struct Assignment {
  /// (pred_index, gt_index) pairs sorted by pred index; exactly
  /// min(n_pred, n_gt) of them.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

/// Globally minimal assignment over an n x m cost matrix. Among equally
/// cheap optima the lexicographically smallest pair list is returned, so the
/// result is platform-independent. Empty matrices yield an empty assignment.
Assignment hungarian(const Matrix& cost);

struct MatchWeights {
  double lambda_l1 = 1.0;
  double lambda_iou = 1.0;
};

struct MomentSetLoss {
  LossReport report;       // value = mean matched cost; grads per pred span
  Assignment assignment;   // the matching the loss was evaluated under
};

/// Set loss between predicted and ground-truth spans: Hungarian matching
/// under cost(i,j) = l1 * (|dc| + |dw|) + iou_w * (1 - giou), then the mean
/// matched cost. Gradients treat the assignment as a constant, as usual in
/// set prediction. Requires at least one ground-truth span.
MomentSetLoss moment_set_loss(const std::vector<Span>& preds,
                              const std::vector<Span>& gts,
                              const MatchWeights& w);

/// Stable identifier of the piecewise-linear region the loss sits in
/// (assignment plus all sign/overlap branches). Used by the gradient checker
/// to detect and skip kink-straddling probes.
std::uint64_t moment_set_loss_branch(const std::vector<Span>& preds,
                                     const std::vector<Span>& gts,
                                     const MatchWeights& w);

}  // namespace vmrtk
