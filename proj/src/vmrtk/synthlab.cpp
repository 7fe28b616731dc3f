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

#include "vmrtk/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vmrtk/parallel.hpp"
#include "vmrtk/rng.hpp"

namespace vmrtk {
namespace {

constexpr std::size_t kGenMinEventFrames = 6;

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_inv(double y) { return std::log(std::expm1(y)); }

// Query-pooled context z = [u, tau, tau2, spread, 1] plus the raw attention
// weights.
struct PooledContext {
  std::vector<double> z;
  std::vector<double> attn;
};

PooledContext pool_context(const SyntheticVideo& video, double sharpness) {
  const Matrix& f = video.features.features;
  const std::size_t t = f.rows;
  const std::size_t d = f.cols;
  if (video.query.size() != d)
    fail(ErrorCode::invalid_argument, "query dimension does not match features");
  const double qn = l2_norm(video.query.data(), d);
  if (qn == 0.0) fail(ErrorCode::invalid_argument, "query has zero norm");

  std::vector<double> score(t);
  for (std::size_t j = 0; j < t; ++j) {
    const double fn = l2_norm(f.row(j), d);
    if (fn == 0.0)
      fail(ErrorCode::numeric,
           "frame " + std::to_string(j) + " has zero norm");
    double c = dot(f.row(j), video.query.data(), d) / (fn * qn);
    c = std::clamp(c, -1.0, 1.0);
    score[j] = sharpness * c;
  }
  const double m = *std::max_element(score.begin(), score.end());
  PooledContext ctx;
  ctx.attn.resize(t);
  double sum = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    ctx.attn[j] = std::exp(score[j] - m);
    sum += ctx.attn[j];
  }
  for (std::size_t j = 0; j < t; ++j) ctx.attn[j] /= sum;

  ctx.z.assign(d + 4, 0.0);
  const double period = video.features.frame_period;
  double tau = 0.0;
  double tau2 = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    const double a = ctx.attn[j];
    const double* row = f.row(j);
    for (std::size_t c = 0; c < d; ++c) ctx.z[c] += a * row[c];
    const double pos = (static_cast<double>(j) + 0.5) * period;
    tau += a * pos;
    tau2 += a * pos * pos;
  }
  ctx.z[d] = tau;
  ctx.z[d + 1] = tau2;
  ctx.z[d + 2] = std::sqrt(std::max(0.0, tau2 - tau * tau));
  ctx.z[d + 3] = 1.0;
  return ctx;
}

struct SlotOut {
  std::vector<Span> spans;
  std::vector<double> pre_width;  // width = softplus(pre_width)
};

SlotOut forward(const ToyModel& model, const std::vector<double>& z) {
  const std::size_t zc = model.dim + 4;
  if (z.size() != zc)
    fail(ErrorCode::invalid_argument, "context size does not match model");
  if (model.center_w.rows != model.slots || model.center_w.cols != zc ||
      model.width_w.rows != model.slots || model.width_w.cols != zc)
    fail(ErrorCode::invalid_argument, "model weight shapes are inconsistent");
  SlotOut out;
  out.spans.reserve(model.slots);
  out.pre_width.reserve(model.slots);
  for (std::size_t k = 0; k < model.slots; ++k) {
    const double c = dot(model.center_w.row(k), z.data(), zc);
    const double r = dot(model.width_w.row(k), z.data(), zc);
    out.spans.push_back(Span{c, softplus(r)});
    out.pre_width.push_back(r);
  }
  return out;
}

void check_dataset(const std::vector<SyntheticVideo>& dataset) {
  if (dataset.empty())
    fail(ErrorCode::invalid_argument, "dataset is empty");
  const std::size_t t = dataset.front().features.features.rows;
  const std::size_t d = dataset.front().features.features.cols;
  for (const SyntheticVideo& v : dataset) {
    validate_frame_features(v.features);
    if (v.features.features.rows != t || v.features.features.cols != d)
      fail(ErrorCode::invalid_argument,
           "videos in a dataset must share frame count and dimension");
    if (v.gt_moments.empty())
      fail(ErrorCode::invalid_argument,
           "video " + v.features.video_id + " has no ground-truth moments");
  }
}

void check_hyper(const TrainHyper& hyper) {
  if (hyper.slots == 0)
    fail(ErrorCode::invalid_argument, "slots must be positive");
  if (hyper.pos_dim == 0)
    fail(ErrorCode::invalid_argument, "pos_dim must be positive");
  if (hyper.epochs == 0)
    fail(ErrorCode::invalid_argument, "epochs must be positive");
  if (!std::isfinite(hyper.lr) || hyper.lr < 0.0)
    fail(ErrorCode::invalid_argument, "learning rate must be finite and >= 0");
  if (!std::isfinite(hyper.attn_sharpness) || hyper.attn_sharpness <= 0.0)
    fail(ErrorCode::invalid_argument, "attn_sharpness must be positive");
}

std::size_t top1_from(const SlotOut& out, const PooledContext& ctx,
                      const FrameFeatures& features) {
  const std::size_t t = features.features.rows;
  std::size_t best = 0;
  double best_mass = -1.0;
  for (std::size_t k = 0; k < out.spans.size(); ++k) {
    const Span& s = out.spans[k];
    double mass = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      const double pos =
          (static_cast<double>(j) + 0.5) * features.frame_period;
      if (pos >= s.start() && pos <= s.end()) mass += ctx.attn[j];
    }
    if (mass > best_mass) {
      best_mass = mass;
      best = k;
    }
  }
  return best;
}

}  // namespace

std::vector<SyntheticVideo> generate_dataset(const SynthConfig& cfg,
                                             std::uint64_t seed) {
  if (cfg.n_videos == 0)
    fail(ErrorCode::invalid_argument, "n_videos must be positive");
  if (cfg.min_events == 0 || cfg.max_events < cfg.min_events)
    fail(ErrorCode::invalid_argument,
         "event count range must satisfy 1 <= min_events <= max_events");
  if (cfg.dim < cfg.max_events)
    fail(ErrorCode::invalid_argument,
         "dim must be >= max_events for orthonormal prototypes");
  if (cfg.t_frames < 2 * cfg.max_events * kGenMinEventFrames)
    fail(ErrorCode::invalid_argument,
         "t_frames too small: need at least " +
             std::to_string(2 * cfg.max_events * kGenMinEventFrames) +
             " frames");
  if (!std::isfinite(cfg.noise_sigma) || cfg.noise_sigma < 0.0)
    fail(ErrorCode::invalid_argument, "noise_sigma must be finite and >= 0");

  const double period = 1.0 / static_cast<double>(cfg.t_frames);
  std::vector<SyntheticVideo> out;
  out.reserve(cfg.n_videos);
  for (std::size_t i = 0; i < cfg.n_videos; ++i) {
    const std::uint64_t vseed = derive_seed(seed, i);
    Rng rng(vseed);
    const std::size_t n_events =
        cfg.min_events + rng.below(cfg.max_events - cfg.min_events + 1);

    // Spread the slack frames roughly proportionally to uniform weights.
    const std::size_t slack = cfg.t_frames - n_events * kGenMinEventFrames;
    std::vector<double> w(n_events);
    double wsum = 0.0;
    for (double& x : w) {
      x = rng.uniform();
      wsum += x;
    }
    std::vector<std::size_t> lens(n_events, kGenMinEventFrames);
    std::size_t used = 0;
    if (wsum > 0.0) {
      for (std::size_t e = 0; e < n_events; ++e) {
        const std::size_t extra = static_cast<std::size_t>(
            std::floor(static_cast<double>(slack) * w[e] / wsum));
        lens[e] += extra;
        used += extra;
      }
    }
    for (std::size_t e = 0; used < slack; ++e, ++used) lens[e] += 1;

    std::vector<std::size_t> bounds(n_events + 1, 0);
    for (std::size_t e = 0; e < n_events; ++e)
      bounds[e + 1] = bounds[e] + lens[e];

    // Orthonormal prototypes via Gram-Schmidt.
    std::vector<std::vector<double>> protos;
    protos.reserve(n_events);
    for (std::size_t e = 0; e < n_events; ++e) {
      std::vector<double> v;
      while (true) {
        v = rng.normal_vector(cfg.dim);
        for (const std::vector<double>& p : protos) {
          const double proj = dot(v.data(), p.data(), cfg.dim);
          for (std::size_t c = 0; c < cfg.dim; ++c) v[c] -= proj * p[c];
        }
        const double n = l2_norm(v.data(), cfg.dim);
        if (n > 1e-6) {
          for (double& x : v) x /= n;
          break;
        }
      }
      protos.push_back(std::move(v));
    }

    const std::size_t gt_event = rng.below(n_events);

    SyntheticVideo video;
    video.seed = vseed;
    video.features.video_id = "synth-" + std::to_string(i);
    video.features.frame_period = period;
    video.features.features = Matrix(cfg.t_frames, cfg.dim);
    std::size_t e = 0;
    for (std::size_t j = 0; j < cfg.t_frames; ++j) {
      while (j >= bounds[e + 1]) ++e;
      double* row = video.features.features.row(j);
      for (std::size_t c = 0; c < cfg.dim; ++c)
        row[c] = protos[e][c] + cfg.noise_sigma * rng.normal();
    }

    video.gt_events.horizon = static_cast<double>(cfg.t_frames) * period;
    for (std::size_t k = 0; k < n_events; ++k)
      video.gt_events.events.push_back(
          span_from_interval(static_cast<double>(bounds[k]) * period,
                             static_cast<double>(bounds[k + 1]) * period));
    video.gt_moments = {video.gt_events.events[gt_event]};
    video.query = protos[gt_event];

    validate_frame_features(video.features);
    validate_event_set(video.gt_events);
    out.push_back(std::move(video));
  }
  return out;
}

ToyModel init_model(std::size_t dim, std::size_t t_frames,
                    const TrainHyper& hyper) {
  check_hyper(hyper);
  if (dim == 0 || t_frames == 0)
    fail(ErrorCode::invalid_argument, "dim and t_frames must be positive");
  ToyModel m;
  m.dim = dim;
  m.slots = hyper.slots;
  m.t_frames = t_frames;
  m.attn_sharpness = hyper.attn_sharpness;
  const std::size_t zc = dim + 4;
  m.center_w = Matrix(hyper.slots, zc);
  m.width_w = Matrix(hyper.slots, zc);
  m.pos_table = Matrix(t_frames, hyper.pos_dim);

  Rng rng(derive_seed(hyper.seed, "model-init"));
  // Slots start as near-full-video spans (wide width bias) so every slot
  // overlaps every moment at epoch 0 and the matcher gets a usable signal.
  // Slots that rarely win a match keep most of that width unless the event
  // regulation is on; it is the only term that trains a slot on videos the
  // matcher did not assign to it.
  for (std::size_t k = 0; k < hyper.slots; ++k)
    for (std::size_t c = 0; c < zc; ++c)
      m.center_w.at(k, c) =
          (c + 1 == zc) ? rng.uniform(0.2, 0.8) : 0.01 * rng.normal();
  for (std::size_t k = 0; k < hyper.slots; ++k)
    for (std::size_t c = 0; c < zc; ++c)
      m.width_w.at(k, c) = (c + 1 == zc) ? softplus_inv(rng.uniform(0.8, 1.4))
                                         : 0.01 * rng.normal();
  for (double& x : m.pos_table.data) x = 0.01 * rng.normal();
  return m;
}

std::vector<Span> predict_spans(const ToyModel& model,
                                const SyntheticVideo& video) {
  if (model.dim != video.features.features.cols)
    fail(ErrorCode::invalid_argument,
         "model dimension does not match video features");
  const PooledContext ctx = pool_context(video, model.attn_sharpness);
  return forward(model, ctx.z).spans;
}

std::size_t top1_slot(const ToyModel& model, const SyntheticVideo& video) {
  if (model.dim != video.features.features.cols)
    fail(ErrorCode::invalid_argument,
         "model dimension does not match video features");
  const PooledContext ctx = pool_context(video, model.attn_sharpness);
  const SlotOut out = forward(model, ctx.z);
  return top1_from(out, ctx, video.features);
}

bool crosses_boundary(const Span& span, const EventSet& events) {
  if (span.width <= 0.0) return false;
  const double lo = span.start();
  const double hi = span.end();
  for (std::size_t e = 0; e + 1 < events.events.size(); ++e) {
    const double b = events.events[e].end();
    const double left = std::max(0.0, std::min(hi, b) - lo);
    const double right = std::max(0.0, hi - std::max(lo, b));
    if (left > 0.1 * span.width && right > 0.1 * span.width) return true;
  }
  return false;
}

EvalResult evaluate(const ToyModel& model,
                    const std::vector<SyntheticVideo>& dataset,
                    const DetectorConfig& detector) {
  check_dataset(dataset);
  EvalResult r;
  std::size_t crossings = 0;
  for (const SyntheticVideo& v : dataset) {
    const PooledContext ctx = pool_context(v, model.attn_sharpness);
    const SlotOut out = forward(model, ctx.z);
    const std::size_t k = top1_from(out, ctx, v.features);
    double best = 0.0;
    for (const Span& gt : v.gt_moments)
      best = std::max(best, iou(out.spans[k], gt));
    r.mean_iou += best;
    const EventSet pseudo = detect_events(v.features, detector);
    if (crosses_boundary(out.spans[k], pseudo)) ++crossings;
  }
  r.mean_iou /= static_cast<double>(dataset.size());
  r.crossing_rate =
      static_cast<double>(crossings) / static_cast<double>(dataset.size());
  return r;
}

TrainResult train(const std::vector<SyntheticVideo>& dataset,
                  TrainToggles toggles, const TrainHyper& hyper) {
  check_dataset(dataset);
  check_hyper(hyper);
  const std::size_t t = dataset.front().features.features.rows;
  const std::size_t d = dataset.front().features.features.cols;
  const double n = static_cast<double>(dataset.size());
  const bool use_evt = toggles.use_evt && hyper.reg.lambda_e != 0.0;
  const bool use_pos = toggles.use_pos && hyper.reg.lambda_p != 0.0;

  std::vector<PooledContext> ctx;
  ctx.reserve(dataset.size());
  for (const SyntheticVideo& v : dataset)
    ctx.push_back(pool_context(v, hyper.attn_sharpness));
  std::vector<EventSet> pseudo;
  if (use_evt || use_pos) {
    pseudo.reserve(dataset.size());
    for (const SyntheticVideo& v : dataset)
      pseudo.push_back(detect_events(v.features, hyper.detector));
  }

  TrainResult result;
  result.model = init_model(d, t, hyper);
  ToyModel& model = result.model;
  const std::size_t zc = d + 4;

  // A constant step does not converge pointwise at the L1 kinks; the
  // iterates chatter in a band whose width scales with the step. A full-rate
  // warm quarter covers the distance from the wide init, the 1/epoch decay
  // then shrinks the band, and the best-loss iterate is kept aside in case
  // the final one sits on the wrong side of a kink.
  double best_loss = std::numeric_limits<double>::infinity();
  ToyModel snapshot = model;
  const double warm = std::max<double>(1.0, hyper.epochs / 4);

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    Matrix gc(hyper.slots, zc);
    Matrix gw(hyper.slots, zc);
    Matrix gp(t, hyper.pos_dim);
    double epoch_loss = 0.0;
    for (std::size_t v = 0; v < dataset.size(); ++v) {
      const SyntheticVideo& video = dataset[v];
      const SlotOut out = forward(model, ctx[v].z);
      const MomentSetLoss mnt =
          moment_set_loss(out.spans, video.gt_moments, hyper.match);
      LossReport evt;
      if (use_evt) evt = l_evt(out.spans, pseudo[v], hyper.reg);
      LossReport pos;
      if (use_pos)
        pos = l_pos(
            PositionEmbeddings{model.pos_table, video.features.frame_period},
            pseudo[v]);
      const LossReport total = total_loss(mnt.report, evt, pos, hyper.reg);
      epoch_loss += total.value;
      for (std::size_t k = 0; k < hyper.slots; ++k) {
        const double dc = total.moment_grads[k].d_center;
        const double dr =
            total.moment_grads[k].d_width * sigmoid(out.pre_width[k]);
        for (std::size_t c = 0; c < zc; ++c) {
          gc.at(k, c) += dc * ctx[v].z[c];
          gw.at(k, c) += dr * ctx[v].z[c];
        }
      }
      if (use_pos)
        for (std::size_t j = 0; j < gp.data.size(); ++j)
          gp.data[j] += total.position_grads[j];
    }
    epoch_loss /= n;
    if (!std::isfinite(epoch_loss))
      fail(ErrorCode::numeric,
           "training loss is not finite at epoch " + std::to_string(epoch));

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      snapshot.center_w = model.center_w;
      snapshot.width_w = model.width_w;
      snapshot.pos_table = model.pos_table;
    }
    result.loss_curve.push_back(epoch_loss);

    const double lr_t =
        hyper.lr * std::min(1.0, warm / static_cast<double>(epoch + 1));
    const double step = lr_t / n;
    for (std::size_t j = 0; j < model.center_w.data.size(); ++j)
      model.center_w.data[j] -= step * gc.data[j];
    for (std::size_t j = 0; j < model.width_w.data.size(); ++j)
      model.width_w.data[j] -= step * gw.data[j];
    if (use_pos)
      for (std::size_t j = 0; j < model.pos_table.data.size(); ++j)
        model.pos_table.data[j] -= step * gp.data[j];
  }

  // The loop evaluates before stepping, so the last update is never scored;
  // give it the same chance as every other iterate before reverting to the
  // best one seen.
  {
    double final_loss = 0.0;
    for (std::size_t v = 0; v < dataset.size(); ++v) {
      const SlotOut out = forward(model, ctx[v].z);
      const MomentSetLoss mnt =
          moment_set_loss(out.spans, dataset[v].gt_moments, hyper.match);
      LossReport evt;
      if (use_evt) evt = l_evt(out.spans, pseudo[v], hyper.reg);
      LossReport pos;
      if (use_pos)
        pos = l_pos(PositionEmbeddings{model.pos_table,
                                       dataset[v].features.frame_period},
                    pseudo[v]);
      final_loss += total_loss(mnt.report, evt, pos, hyper.reg).value;
    }
    final_loss /= n;
    if (final_loss > best_loss) {
      model.center_w = snapshot.center_w;
      model.width_w = snapshot.width_w;
      model.pos_table = snapshot.pos_table;
    }
  }

  result.final_eval = evaluate(model, dataset, hyper.detector);
  return result;
}

AblationReport run_ablation(const SynthConfig& cfg, const TrainHyper& base,
                            const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty())
    fail(ErrorCode::invalid_argument, "at least one seed is required");
  const TrainToggles configs[4] = {
      {false, false}, {true, false}, {false, true}, {true, true}};

  AblationReport report;
  report.cells.resize(4 * seeds.size());
  parallel_for(report.cells.size(), [&](std::size_t job) {
    const std::size_t ci = job / seeds.size();
    const std::size_t si = job % seeds.size();
    const std::vector<SyntheticVideo> dataset =
        generate_dataset(cfg, seeds[si]);
    TrainHyper hyper = base;
    hyper.seed = seeds[si];
    const TrainResult r = train(dataset, configs[ci], hyper);
    AblationCell& cell = report.cells[job];
    cell.toggles = configs[ci];
    cell.seed = seeds[si];
    cell.mean_iou = r.final_eval.mean_iou;
    cell.crossing_rate = r.final_eval.crossing_rate;
    cell.loss_curve = r.loss_curve;
    if (si == 0) cell.first_video_preds = predict_spans(r.model, dataset[0]);
  });

  for (std::size_t ci = 0; ci < 4; ++ci) {
    AblationSummary s;
    s.toggles = configs[ci];
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const AblationCell& cell = report.cells[ci * seeds.size() + si];
      s.mean_iou += cell.mean_iou;
      s.mean_crossing_rate += cell.crossing_rate;
    }
    s.mean_iou /= static_cast<double>(seeds.size());
    s.mean_crossing_rate /= static_cast<double>(seeds.size());
    report.summaries.push_back(s);
  }

  const std::vector<SyntheticVideo> first = generate_dataset(cfg, seeds[0]);
  report.first_video_events = detect_events(first[0].features, base.detector);
  report.first_video_gt = first[0].gt_moments;
  return report;
}

}  // namespace vmrtk
