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

#include "vmrtk/span.hpp"

#include <algorithm>
#include <cmath>

namespace vmrtk {

namespace {

void check_span(const Span& s, const char* who) {
  if (!(s.width >= 0.0) || !std::isfinite(s.center) || !std::isfinite(s.width))
    fail(ErrorCode::invalid_argument,
         std::string(who) + ": span must have finite center and width >= 0");
}

}  // namespace

double iou(const Span& a, const Span& b) {
  check_span(a, "iou");
  check_span(b, "iou");
  const double inter =
      std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
  const double uni = a.width + b.width - inter;
  if (uni <= 0.0) {
    // Both point spans: equal centers count as a perfect match.
    return a.center == b.center ? 1.0 : 0.0;
  }
  return inter / uni;
}

double giou(const Span& a, const Span& b) {
  check_span(a, "giou");
  check_span(b, "giou");
  const double hull =
      std::max(a.end(), b.end()) - std::min(a.start(), b.start());
  if (hull <= 0.0) return 1.0;  // two identical point spans
  const double inter =
      std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
  const double uni = a.width + b.width - inter;
  const double i = uni > 0.0 ? inter / uni : 0.0;
  return i - (hull - uni) / hull;
}

GiouGrad giou_gradient(const Span& a, const Span& b) {
  check_span(a, "giou_gradient");
  check_span(b, "giou_gradient");
  GiouGrad out;
  out.value = giou(a, b);

  const double sa = a.start(), ea = a.end();
  const double sb = b.start(), eb = b.end();
  const double hull = std::max(ea, eb) - std::min(sa, sb);
  if (hull <= 0.0) return out;  // flat at the identical-point-span corner

  const double inter = std::max(0.0, std::min(ea, eb) - std::max(sa, sb));
  const double uni = a.width + b.width - inter;

  // Derivatives w.r.t. a's endpoints; each max/min picks one active side.
  const bool overlapping = inter > 0.0;
  const double di_dsa = (overlapping && sa > sb) ? -1.0 : 0.0;
  const double di_dea = (overlapping && ea < eb) ? 1.0 : 0.0;
  const double du_dsa = -1.0 - di_dsa;  // d(width)/dsa = -1
  const double du_dea = 1.0 - di_dea;
  const double dh_dsa = (sa < sb) ? -1.0 : 0.0;
  const double dh_dea = (ea > eb) ? 1.0 : 0.0;

  double diou_dsa = 0.0, diou_dea = 0.0;
  if (uni > 0.0) {
    diou_dsa = (di_dsa * uni - inter * du_dsa) / (uni * uni);
    diou_dea = (di_dea * uni - inter * du_dea) / (uni * uni);
  }
  // giou = iou - 1 + uni/hull
  const double dg_dsa =
      diou_dsa + (du_dsa * hull - uni * dh_dsa) / (hull * hull);
  const double dg_dea =
      diou_dea + (du_dea * hull - uni * dh_dea) / (hull * hull);

  out.d_center = dg_dsa + dg_dea;
  out.d_width = 0.5 * (dg_dea - dg_dsa);
  out.branch_id = (overlapping ? 1u : 0u) | (sa > sb ? 2u : 0u) |
                  (ea < eb ? 4u : 0u) | (sa < sb ? 8u : 0u) |
                  (ea > eb ? 16u : 0u) | (uni > 0.0 ? 32u : 0u);
  return out;
}

}  // namespace vmrtk
