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

#include <cstdint>
#include <vector>

#include "vmrtk/events.hpp"
#include "vmrtk/loss_report.hpp"
#include "vmrtk/span.hpp"

namespace vmrtk {

struct RegulationWeights {
  double lambda_l1 = 1.0;   // L1 term weight inside the event loss
  double lambda_iou = 1.0;  // GIoU term weight inside the event loss
  double lambda_e = 0.1;    // event-regulation weight in the total
  double lambda_p = 0.001;  // position-regulation weight in the total
};

/// How predicted moments are associated with events. best_iou pairs each
/// moment with a single event (highest IoU; ties to the earlier event; if all
/// IoUs are zero, nearest center, again ties to the earlier event).
/// all_events sums the penalty over every event for every moment.
enum class EvtMode { best_iou, all_events };

/// Learned per-frame position embeddings (one row per frame) plus the
/// seconds-per-frame scale that maps event spans onto frame rows.
struct PositionEmbeddings {
  Matrix embeddings;  // T x d
  double frame_period = 1.0;
};

/// Event-alignment penalty: each associated (moment, event) pair contributes
/// lambda_l1 * (|dc| + |dw|) + lambda_iou * (1 - giou). Value is the plain
/// sum over contributions; gradients are w.r.t. each predicted [center,
/// width] with the association held fixed.
LossReport l_evt(const std::vector<Span>& preds, const EventSet& events,
                 const RegulationWeights& w, EvtMode mode = EvtMode::best_iou);

/// Position-embedding compactness penalty: per event, exp of the mean
/// absolute deviation of member-frame rows from the center-frame row, summed
/// over events. The exponent is clamped at 50 (saturated flag set); inside
/// the clamp the gradient is zero. position_grads has one entry per matrix
/// cell, row-major.
LossReport l_pos(const PositionEmbeddings& pos, const EventSet& events);

/// value = mnt + lambda_e * evt + lambda_p * pos; gradient blocks combine
/// with the same coefficients. Non-empty blocks of unequal size are an error;
/// an empty block acts as zeros.
LossReport total_loss(const LossReport& mnt, const LossReport& evt,
                      const LossReport& pos, const RegulationWeights& w);

// Smooth-piece signatures for the finite-difference checker: the hash folds
// in every data-dependent choice (associations, L1 signs, giou branches,
// clamp states) so probes on different pieces can be skipped.
std::uint64_t l_evt_branch(const std::vector<Span>& preds,
                           const EventSet& events, const RegulationWeights& w,
                           EvtMode mode = EvtMode::best_iou);
std::uint64_t l_pos_branch(const PositionEmbeddings& pos,
                           const EventSet& events);

}  // namespace vmrtk
