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

#include "vmrtk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "vmrtk/parallel.hpp"

namespace vmrtk {

std::vector<double> standard_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i <= 9; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

namespace {

// Rank order: descending score, ties by input position (stable).
std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

void check_prediction(const MomentPrediction& p) {
  if (p.spans.size() != p.scores.size())
    fail(ErrorCode::invalid_argument,
         "video '" + p.video_id + "': spans and scores differ in length");
  for (double s : p.scores)
    if (!std::isfinite(s))
      fail(ErrorCode::invalid_argument,
           "video '" + p.video_id + "': non-finite score");
}

std::unordered_map<std::string, const MomentPrediction*> index_preds(
    const std::vector<MomentPrediction>& preds) {
  std::unordered_map<std::string, const MomentPrediction*> by_id;
  for (const MomentPrediction& p : preds) {
    check_prediction(p);
    if (!by_id.emplace(p.video_id, &p).second)
      fail(ErrorCode::invalid_argument,
           "duplicate prediction entry for video '" + p.video_id + "'");
  }
  return by_id;
}

void check_gts(const std::vector<MomentGroundTruth>& gts,
               const std::unordered_map<std::string, const MomentPrediction*>&
                   preds_by_id) {
  std::unordered_map<std::string, bool> seen;
  for (const MomentGroundTruth& g : gts) {
    if (g.spans.empty())
      fail(ErrorCode::invalid_argument,
           "video '" + g.video_id + "' has no ground-truth spans");
    if (!seen.emplace(g.video_id, true).second)
      fail(ErrorCode::invalid_argument,
           "duplicate ground-truth entry for video '" + g.video_id + "'");
  }
  for (const auto& [id, p] : preds_by_id) {
    (void)p;
    if (!seen.count(id))
      fail(ErrorCode::invalid_argument,
           "predictions for video '" + id + "' have no ground truth");
  }
}

// Greedy rank-order matching at one threshold: tp[r] says whether the r-th
// ranked prediction claimed a still-unmatched span.
std::vector<char> greedy_tp(const MomentPrediction& pred,
                            const std::vector<Span>& gt_spans,
                            double threshold) {
  const std::vector<std::size_t> order = rank_order(pred.scores);
  std::vector<char> matched(gt_spans.size(), 0);
  std::vector<char> tp(order.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Span& s = pred.spans[order[r]];
    double best = -1.0;
    std::size_t best_g = gt_spans.size();
    for (std::size_t g = 0; g < gt_spans.size(); ++g) {
      if (matched[g]) continue;
      const double v = iou(s, gt_spans[g]);
      if (v >= threshold && v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g < gt_spans.size()) {
      matched[best_g] = 1;
      tp[r] = 1;
    }
  }
  return tp;
}

// Average precision with the all-point precision envelope: sum, over true-
// positive ranks, of the best precision at or after that rank, divided by the
// number of positives. Kept as one final division so the brute-force oracle
// can match it bit for bit.
double average_precision(const std::vector<char>& tp, std::size_t n_pos) {
  std::vector<double> precision(tp.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < tp.size(); ++r) {
    if (tp[r]) ++hits;
    precision[r] = static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  double envelope = 0.0;
  std::vector<double> env(tp.size());
  for (std::size_t r = tp.size(); r-- > 0;) {
    envelope = std::max(envelope, precision[r]);
    env[r] = envelope;
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < tp.size(); ++r)
    if (tp[r]) sum += env[r];
  return sum / static_cast<double>(n_pos);
}

}  // namespace

std::map<double, double> recall_at_1(
    const std::vector<MomentPrediction>& preds,
    const std::vector<MomentGroundTruth>& gts,
    const std::vector<double>& thresholds) {
  if (gts.empty())
    fail(ErrorCode::invalid_argument, "recall needs at least one video");
  const auto by_id = index_preds(preds);
  check_gts(gts, by_id);

  std::map<double, double> out;
  for (double thr : thresholds) {
    std::size_t hits = 0;
    for (const MomentGroundTruth& g : gts) {
      const auto it = by_id.find(g.video_id);
      if (it == by_id.end() || it->second->spans.empty()) continue;
      const MomentPrediction& p = *it->second;
      const Span& top = p.spans[rank_order(p.scores)[0]];
      double best = 0.0;
      for (const Span& gs : g.spans) best = std::max(best, iou(top, gs));
      if (best >= thr) ++hits;
    }
    out[thr] = static_cast<double>(hits) / static_cast<double>(gts.size());
  }
  return out;
}

MapResult mean_average_precision(const std::vector<MomentPrediction>& preds,
                                 const std::vector<MomentGroundTruth>& gts,
                                 const std::vector<double>& thresholds) {
  if (gts.empty())
    fail(ErrorCode::invalid_argument, "mAP needs at least one video");
  if (thresholds.empty())
    fail(ErrorCode::invalid_argument, "mAP needs at least one threshold");
  const auto by_id = index_preds(preds);
  check_gts(gts, by_id);

  static const MomentPrediction kEmpty{};
  // ap[v * n_thr + t]; filled per video, reduced in index order below.
  std::vector<double> ap(gts.size() * thresholds.size(), 0.0);
  parallel_for(gts.size(), [&](std::size_t v) {
    const MomentGroundTruth& g = gts[v];
    const auto it = by_id.find(g.video_id);
    const MomentPrediction& p = it == by_id.end() ? kEmpty : *it->second;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (p.spans.empty()) continue;  // AP 0
      ap[v * thresholds.size() + t] =
          average_precision(greedy_tp(p, g.spans, thresholds[t]),
                            g.spans.size());
    }
  });

  MapResult out;
  double total = 0.0;
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    double sum = 0.0;
    for (std::size_t v = 0; v < gts.size(); ++v)
      sum += ap[v * thresholds.size() + t];
    const double m = sum / static_cast<double>(gts.size());
    out.per_threshold[thresholds[t]] = m;
    total += m;
  }
  out.average = total / static_cast<double>(thresholds.size());
  return out;
}

HighlightResult highlight_metrics(
    const std::vector<HighlightAnnotation>& anns) {
  if (anns.empty())
    fail(ErrorCode::invalid_argument, "highlight metrics need videos");
  std::unordered_map<std::string, bool> seen;
  for (const HighlightAnnotation& a : anns) {
    if (a.labels.empty())
      fail(ErrorCode::invalid_argument,
           "video '" + a.video_id + "' has no clips");
    if (a.labels.size() != a.scores.size())
      fail(ErrorCode::invalid_argument,
           "video '" + a.video_id + "': labels and scores differ in length");
    if (!seen.emplace(a.video_id, true).second)
      fail(ErrorCode::invalid_argument,
           "duplicate annotation entry for video '" + a.video_id + "'");
    for (int label : a.labels)
      if (label < 0 || label > 4)
        fail(ErrorCode::invalid_argument,
             "video '" + a.video_id + "': saliency labels must be in 0..4");
    for (double s : a.scores)
      if (!std::isfinite(s))
        fail(ErrorCode::invalid_argument,
             "video '" + a.video_id + "': non-finite score");
  }

  HighlightResult out;
  double ap_sum = 0.0;
  std::size_t hits = 0;
  for (const HighlightAnnotation& a : anns) {
    const std::size_t n_pos = static_cast<std::size_t>(
        std::count(a.labels.begin(), a.labels.end(), 4));
    if (n_pos == 0) {
      ++out.n_excluded;
      continue;
    }
    const std::vector<std::size_t> order = rank_order(a.scores);
    std::vector<char> tp(order.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r)
      tp[r] = a.labels[order[r]] == 4;
    ap_sum += average_precision(tp, n_pos);
    if (tp[0]) ++hits;
    ++out.n_videos;
  }
  if (out.n_videos == 0)
    fail(ErrorCode::invalid_argument,
         "no video has a clip with the top saliency label");
  out.hd_map = ap_sum / static_cast<double>(out.n_videos);
  out.hit_at_1 = static_cast<double>(hits) / static_cast<double>(out.n_videos);
  return out;
}

MrReport evaluate_mr(const std::vector<MomentPrediction>& preds,
                     const std::vector<MomentGroundTruth>& gts) {
  MrReport out;
  out.r1 = recall_at_1(preds, gts, {0.5, 0.7});
  const MapResult m = mean_average_precision(preds, gts,
                                             standard_iou_thresholds());
  out.map_at = m.per_threshold;
  out.map_avg = m.average;
  out.n_videos = gts.size();
  return out;
}

}  // namespace vmrtk
