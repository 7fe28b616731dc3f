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

#include "vmrtk/gradsuite.hpp"

#include <algorithm>
#include <utility>

#include "vmrtk/losses.hpp"
#include "vmrtk/matching.hpp"
#include "vmrtk/rng.hpp"

namespace vmrtk {
namespace {

// eps large enough that difference roundoff stays well under the 1e-4
// acceptance tolerance even for the exp-shaped position loss, and small
// enough that its 10*eps kink probes rarely fire.
constexpr GradCheckConfig kSuiteCfg{1e-5, 1e-6, 10.0};

std::vector<Span> unpack_spans(const std::vector<double>& x, std::size_t k) {
  std::vector<Span> s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = Span{x[2 * i], x[2 * i + 1]};
  return s;
}

std::vector<double> pack_spans(const std::vector<Span>& s) {
  std::vector<double> x(2 * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    x[2 * i] = s[i].center;
    x[2 * i + 1] = s[i].width;
  }
  return x;
}

std::vector<double> flatten_grads(const std::vector<SpanGrad>& g) {
  std::vector<double> x(2 * g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    x[2 * i] = g[i].d_center;
    x[2 * i + 1] = g[i].d_width;
  }
  return x;
}

std::vector<Span> random_spans(Rng& rng, std::size_t lo, std::size_t hi,
                               double c_lo, double c_hi, double w_lo,
                               double w_hi) {
  const std::size_t k = lo + rng.below(hi - lo + 1);
  std::vector<Span> s(k);
  for (Span& sp : s)
    sp = Span{rng.uniform(c_lo, c_hi), rng.uniform(w_lo, w_hi)};
  return s;
}

// Contiguous partition of [0, horizon] with cuts kept a few percent apart so
// probe offsets never jump a boundary on their own.
EventSet random_partition(Rng& rng, double horizon, std::size_t max_events) {
  const std::size_t n = 1 + rng.below(max_events);
  std::vector<double> cuts;
  while (cuts.size() + 1 < n) {
    const double c = rng.uniform(0.05 * horizon, 0.95 * horizon);
    bool ok = true;
    for (double o : cuts)
      if (std::abs(c - o) < 0.04 * horizon) ok = false;
    if (ok) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  EventSet es;
  es.horizon = horizon;
  double lo = 0.0;
  for (double c : cuts) {
    es.events.push_back(span_from_interval(lo, c));
    lo = c;
  }
  es.events.push_back(span_from_interval(lo, horizon));
  return es;
}

// Partition whose cuts lie on the frame grid, as l_pos requires.
EventSet frame_partition(Rng& rng, std::size_t t_frames, double frame_period,
                         std::size_t max_events) {
  const std::size_t n =
      1 + rng.below(std::min(max_events, t_frames));
  std::vector<std::size_t> frames(t_frames - 1);
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = i + 1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.below(frames.size() - i);
    std::swap(frames[i], frames[j]);
  }
  std::vector<std::size_t> cuts(frames.begin(), frames.begin() + (n - 1));
  std::sort(cuts.begin(), cuts.end());
  EventSet es;
  es.horizon = static_cast<double>(t_frames) * frame_period;
  std::size_t lo = 0;
  for (std::size_t c : cuts) {
    es.events.push_back(
        span_from_interval(static_cast<double>(lo) * frame_period,
                           static_cast<double>(c) * frame_period));
    lo = c;
  }
  es.events.push_back(
      span_from_interval(static_cast<double>(lo) * frame_period,
                         static_cast<double>(t_frames) * frame_period));
  return es;
}

std::uint64_t mix_branch(std::uint64_t h, std::uint64_t b) {
  h ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

void accumulate(GradCheckResult& agg, const GradCheckResult& one) {
  if (one.max_rel_err > agg.max_rel_err) {
    agg.max_rel_err = one.max_rel_err;
    agg.worst_coord = one.worst_coord;
  }
  agg.n_checked += one.n_checked;
  agg.n_skipped += one.n_skipped;
}

GradCheckResult check_moment(Rng& rng) {
  const std::vector<Span> preds =
      random_spans(rng, 1, 4, -1.0, 2.0, 0.2, 1.5);
  const std::vector<Span> gts = random_spans(rng, 1, 4, -1.0, 2.0, 0.2, 1.5);
  MatchWeights w{rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)};
  const std::size_t k = preds.size();
  return check_gradients(
      [&](const std::vector<double>& x) {
        return moment_set_loss(unpack_spans(x, k), gts, w).report.value;
      },
      [&](const std::vector<double>& x) {
        return flatten_grads(
            moment_set_loss(unpack_spans(x, k), gts, w).report.moment_grads);
      },
      pack_spans(preds), kSuiteCfg,
      [&](const std::vector<double>& x) {
        return moment_set_loss_branch(unpack_spans(x, k), gts, w);
      });
}

GradCheckResult check_evt(Rng& rng, EvtMode mode) {
  const double horizon = rng.uniform(2.0, 8.0);
  const EventSet events = random_partition(rng, horizon, 4);
  const std::vector<Span> preds =
      random_spans(rng, 1, 4, -0.5, horizon + 0.5, 0.1, 0.6 * horizon);
  RegulationWeights w;
  w.lambda_l1 = rng.uniform(0.3, 2.0);
  w.lambda_iou = rng.uniform(0.3, 2.0);
  const std::size_t k = preds.size();
  return check_gradients(
      [&](const std::vector<double>& x) {
        return l_evt(unpack_spans(x, k), events, w, mode).value;
      },
      [&](const std::vector<double>& x) {
        return flatten_grads(
            l_evt(unpack_spans(x, k), events, w, mode).moment_grads);
      },
      pack_spans(preds), kSuiteCfg,
      [&](const std::vector<double>& x) {
        return l_evt_branch(unpack_spans(x, k), events, w, mode);
      });
}

GradCheckResult check_pos(Rng& rng) {
  const std::size_t t = 6 + rng.below(11);
  const std::size_t d = 1 + rng.below(3);
  const double fp = rng.uniform(0.05, 0.5);
  const EventSet events = frame_partition(rng, t, fp, 4);
  std::vector<double> x(t * d);
  for (double& v : x) v = 0.5 * rng.normal();
  auto make = [&](const std::vector<double>& v) {
    Matrix m(t, d);
    m.data = v;
    return PositionEmbeddings{m, fp};
  };
  return check_gradients(
      [&](const std::vector<double>& v) { return l_pos(make(v), events).value; },
      [&](const std::vector<double>& v) {
        return l_pos(make(v), events).position_grads;
      },
      x, kSuiteCfg,
      [&](const std::vector<double>& v) {
        return l_pos_branch(make(v), events);
      });
}

GradCheckResult check_total(Rng& rng) {
  const std::size_t t = 6 + rng.below(7);
  const std::size_t d = 1 + rng.below(2);
  const double fp = rng.uniform(0.05, 0.4);
  const EventSet events = frame_partition(rng, t, fp, 3);
  const double horizon = events.horizon;
  const std::vector<Span> preds =
      random_spans(rng, 1, 3, -0.2, horizon + 0.2, 0.1, 0.5 * horizon);
  const std::vector<Span> gts =
      random_spans(rng, 1, 3, 0.0, horizon, 0.1, 0.5 * horizon);
  RegulationWeights w;
  w.lambda_l1 = rng.uniform(0.3, 2.0);
  w.lambda_iou = rng.uniform(0.3, 2.0);
  w.lambda_e = rng.uniform(0.05, 0.5);
  w.lambda_p = rng.uniform(0.001, 0.1);
  MatchWeights mw{w.lambda_l1, w.lambda_iou};
  const std::size_t k = preds.size();
  const std::size_t n_span = 2 * k;

  auto eval = [&](const std::vector<double>& x) {
    const std::vector<Span> p = unpack_spans(x, k);
    Matrix m(t, d);
    m.data.assign(x.begin() + static_cast<std::ptrdiff_t>(n_span), x.end());
    const PositionEmbeddings pe{m, fp};
    return total_loss(moment_set_loss(p, gts, mw).report,
                      l_evt(p, events, w), l_pos(pe, events), w);
  };

  std::vector<double> x = pack_spans(preds);
  std::vector<double> pos(t * d);
  for (double& v : pos) v = 0.5 * rng.normal();
  x.insert(x.end(), pos.begin(), pos.end());

  return check_gradients(
      [&](const std::vector<double>& v) { return eval(v).value; },
      [&](const std::vector<double>& v) {
        const LossReport r = eval(v);
        std::vector<double> g = flatten_grads(r.moment_grads);
        g.insert(g.end(), r.position_grads.begin(), r.position_grads.end());
        return g;
      },
      x, kSuiteCfg,
      [&](const std::vector<double>& v) {
        const std::vector<Span> p = unpack_spans(v, k);
        Matrix m(t, d);
        m.data.assign(v.begin() + static_cast<std::ptrdiff_t>(n_span),
                      v.end());
        std::uint64_t h = moment_set_loss_branch(p, gts, mw);
        h = mix_branch(h, l_evt_branch(p, events, w));
        h = mix_branch(h, l_pos_branch(PositionEmbeddings{m, fp}, events));
        return h;
      });
}

}  // namespace

GradSuiteReport run_gradcheck_suite(std::uint64_t seed,
                                    std::size_t points_per_loss,
                                    double tolerance) {
  if (points_per_loss == 0)
    fail(ErrorCode::invalid_argument, "points_per_loss must be positive");
  if (!(tolerance > 0.0))
    fail(ErrorCode::invalid_argument, "tolerance must be positive");

  struct Named {
    const char* name;
    GradCheckResult (*run)(Rng&);
  };
  const Named losses[] = {
      {"moment_set_loss", [](Rng& r) { return check_moment(r); }},
      {"l_evt_best_iou", [](Rng& r) { return check_evt(r, EvtMode::best_iou); }},
      {"l_evt_all_events",
       [](Rng& r) { return check_evt(r, EvtMode::all_events); }},
      {"l_pos", [](Rng& r) { return check_pos(r); }},
      {"total_loss", [](Rng& r) { return check_total(r); }},
  };

  GradSuiteReport report;
  report.tolerance = tolerance;
  report.passed = true;
  for (const Named& loss : losses) {
    GradSuiteEntry entry;
    entry.name = loss.name;
    const std::uint64_t loss_seed = derive_seed(seed, loss.name);
    for (std::size_t i = 0; i < points_per_loss; ++i) {
      Rng rng(derive_seed(loss_seed, i));
      accumulate(entry.result, loss.run(rng));
    }
    if (!(entry.result.max_rel_err < tolerance) || entry.result.n_checked == 0)
      report.passed = false;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace vmrtk
