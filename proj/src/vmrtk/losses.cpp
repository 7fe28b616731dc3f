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

#include "vmrtk/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmrtk/rng.hpp"

namespace vmrtk {

namespace {

constexpr double kExpClamp = 50.0;

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_regulation_weights(const RegulationWeights& w) {
  if (w.lambda_l1 < 0.0 || w.lambda_iou < 0.0 || w.lambda_e < 0.0 ||
      w.lambda_p < 0.0)
    fail(ErrorCode::invalid_argument, "regulation weights must be >= 0");
}

// Index of the event associated with pred: highest IoU, ties to the earlier
// event; if every IoU is zero, the event with the nearest center.
std::size_t associate(const Span& pred, const std::vector<Span>& events) {
  std::size_t best = 0;
  double best_iou = -1.0;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double v = iou(pred, events[e]);
    if (v > best_iou) {
      best_iou = v;
      best = e;
    }
  }
  if (best_iou > 0.0) return best;
  std::size_t nearest = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double gap = std::abs(pred.center - events[e].center);
    if (gap < best_gap) {
      best_gap = gap;
      nearest = e;
    }
  }
  return nearest;
}

}  // namespace

LossReport l_evt(const std::vector<Span>& preds, const EventSet& events,
                 const RegulationWeights& w, EvtMode mode) {
  validate_event_set(events);
  check_regulation_weights(w);

  LossReport out;
  out.moment_grads.assign(preds.size(), SpanGrad{});
  out.per_term.assign(preds.size(), 0.0);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Span& m = preds[k];
    std::vector<std::size_t> targets;
    if (mode == EvtMode::best_iou) {
      targets.push_back(associate(m, events.events));
    } else {
      targets.resize(events.events.size());
      for (std::size_t e = 0; e < targets.size(); ++e) targets[e] = e;
    }
    for (std::size_t e : targets) {
      const Span& ev = events.events[e];
      const double l1 =
          std::abs(m.center - ev.center) + std::abs(m.width - ev.width);
      const GiouGrad gg = giou_gradient(m, ev);
      out.per_term[k] += w.lambda_l1 * l1 + w.lambda_iou * (1.0 - gg.value);
      out.moment_grads[k].d_center += w.lambda_l1 * sign_of(m.center - ev.center) -
                                      w.lambda_iou * gg.d_center;
      out.moment_grads[k].d_width += w.lambda_l1 * sign_of(m.width - ev.width) -
                                     w.lambda_iou * gg.d_width;
    }
    out.value += out.per_term[k];
  }
  return out;
}

std::uint64_t l_evt_branch(const std::vector<Span>& preds,
                           const EventSet& events, const RegulationWeights& w,
                           EvtMode mode) {
  (void)w;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= splitmix64(x);
    h *= 0x100000001b3ULL;
  };
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Span& m = preds[k];
    std::vector<std::size_t> targets;
    if (mode == EvtMode::best_iou) {
      targets.push_back(associate(m, events.events));
    } else {
      targets.resize(events.events.size());
      for (std::size_t e = 0; e < targets.size(); ++e) targets[e] = e;
    }
    for (std::size_t e : targets) {
      const Span& ev = events.events[e];
      mix(k);
      mix(e);
      mix(static_cast<std::uint64_t>(sign_of(m.center - ev.center) + 2.0));
      mix(static_cast<std::uint64_t>(sign_of(m.width - ev.width) + 2.0));
      mix(giou_gradient(m, ev).branch_id);
    }
  }
  return h;
}

LossReport l_pos(const PositionEmbeddings& pos, const EventSet& events) {
  validate_event_set(events);
  const std::size_t t = pos.embeddings.rows, d = pos.embeddings.cols;
  if (t < 1 || d < 1)
    fail(ErrorCode::invalid_argument, "position embeddings must be non-empty");
  for (double v : pos.embeddings.data)
    if (!std::isfinite(v))
      fail(ErrorCode::invalid_argument, "non-finite position embedding entry");

  LossReport out;
  out.position_grads.assign(t * d, 0.0);
  for (const Span& event : events.events) {
    const auto [first, last_ex] = event_frame_range(event, pos.frame_period, t);
    const std::size_t last = last_ex - 1;
    const std::size_t center = (first + last) / 2;
    const double n = static_cast<double>((last_ex - first) * d);
    double dev = 0.0;
    for (std::size_t i = first; i < last_ex; ++i)
      for (std::size_t j = 0; j < d; ++j)
        dev += std::abs(pos.embeddings.at(i, j) - pos.embeddings.at(center, j));
    const double exponent = dev / n;
    const bool clamped = exponent > kExpClamp;
    const double term = std::exp(clamped ? kExpClamp : exponent);
    out.per_term.push_back(term);
    out.value += term;
    if (clamped) {
      out.saturated = true;
      continue;
    }
    for (std::size_t i = first; i < last_ex; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double s =
            sign_of(pos.embeddings.at(i, j) - pos.embeddings.at(center, j));
        const double g = term * s / n;
        out.position_grads[i * d + j] += g;
        out.position_grads[center * d + j] -= g;
      }
  }
  return out;
}

std::uint64_t l_pos_branch(const PositionEmbeddings& pos,
                           const EventSet& events) {
  const std::size_t t = pos.embeddings.rows, d = pos.embeddings.cols;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= splitmix64(x);
    h *= 0x100000001b3ULL;
  };
  for (const Span& event : events.events) {
    const auto [first, last_ex] = event_frame_range(event, pos.frame_period, t);
    const std::size_t center = (first + (last_ex - 1)) / 2;
    const double n = static_cast<double>((last_ex - first) * d);
    double dev = 0.0;
    mix(first);
    mix(last_ex);
    for (std::size_t i = first; i < last_ex; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double delta =
            pos.embeddings.at(i, j) - pos.embeddings.at(center, j);
        dev += std::abs(delta);
        mix(static_cast<std::uint64_t>(sign_of(delta) + 2.0));
      }
    mix(dev / n > kExpClamp ? 1 : 0);
  }
  return h;
}

namespace {

// Weighted entrywise sum of gradient blocks; empty blocks act as zeros and
// non-empty blocks must agree in size.
template <typename T, typename Add>
std::vector<T> combine_blocks(const std::vector<T>& a, const std::vector<T>& b,
                              const std::vector<T>& c, double wb, double wc,
                              Add add) {
  std::size_t size = 0;
  for (const auto* blk : {&a, &b, &c}) {
    if (blk->empty()) continue;
    if (size == 0) size = blk->size();
    if (blk->size() != size)
      fail(ErrorCode::invalid_argument,
           "loss reports carry gradient blocks of different sizes");
  }
  std::vector<T> out(size, T{});
  for (std::size_t i = 0; i < a.size(); ++i) add(out[i], a[i], 1.0);
  for (std::size_t i = 0; i < b.size(); ++i) add(out[i], b[i], wb);
  for (std::size_t i = 0; i < c.size(); ++i) add(out[i], c[i], wc);
  return out;
}

}  // namespace

LossReport total_loss(const LossReport& mnt, const LossReport& evt,
                      const LossReport& pos, const RegulationWeights& w) {
  check_regulation_weights(w);
  LossReport out;
  out.value = mnt.value + w.lambda_e * evt.value + w.lambda_p * pos.value;
  out.moment_grads = combine_blocks(
      mnt.moment_grads, evt.moment_grads, pos.moment_grads, w.lambda_e,
      w.lambda_p, [](SpanGrad& acc, const SpanGrad& g, double k) {
        acc.d_center += k * g.d_center;
        acc.d_width += k * g.d_width;
      });
  out.position_grads = combine_blocks(
      mnt.position_grads, evt.position_grads, pos.position_grads, w.lambda_e,
      w.lambda_p,
      [](double& acc, double g, double k) { acc += k * g; });
  out.per_term = {mnt.value, evt.value, pos.value};
  out.saturated = mnt.saturated || evt.saturated || pos.saturated;
  return out;
}

}  // namespace vmrtk
