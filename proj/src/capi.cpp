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

#include "vmrtk/vmrtk.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmrtk/embedding_table.hpp"
#include "vmrtk/events.hpp"
#include "vmrtk/feasibility.hpp"
#include "vmrtk/formats.hpp"
#include "vmrtk/gradsuite.hpp"
#include "vmrtk/losses.hpp"
#include "vmrtk/matching.hpp"
#include "vmrtk/metrics.hpp"
#include "vmrtk/parallel.hpp"
#include "vmrtk/refiner.hpp"
#include "vmrtk/synthlab.hpp"

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct vmr_table {
  vmrtk::EmbeddingTable table;
};

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
int guard(Fn&& fn) {
  try {
    fn();
    return VMR_OK;
  } catch (const vmrtk::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(VMR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(VMR_ERR_INTERNAL, e.what());
  }
}

int require(bool ok, const char* what) {
  if (ok) return VMR_OK;
  return set_error(VMR_ERR_INVALID_ARGUMENT, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr)
    vmrtk::fail(vmrtk::ErrorCode::internal, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit_json(const ordered_json& doc, char** out_json) {
  *out_json = dup_string(doc.dump());
}

vmrtk::TableFormat to_format(int format, const char* path) {
  switch (format) {
    case VMR_FORMAT_AUTO:
      return vmrtk::guess_table_format(path == nullptr ? "" : path);
    case VMR_FORMAT_BINARY:
      return vmrtk::TableFormat::binary;
    case VMR_FORMAT_CSV:
      return vmrtk::TableFormat::csv;
    default:
      vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                  "format must be one of VMR_FORMAT_{AUTO,BINARY,CSV}");
  }
}

std::vector<vmrtk::Span> unpack_spans(const double* packed, size_t n) {
  std::vector<vmrtk::Span> spans(n);
  for (size_t i = 0; i < n; ++i)
    spans[i] = vmrtk::Span{packed[2 * i], packed[2 * i + 1]};
  return spans;
}

vmrtk::EventSet unpack_events(const double* packed, size_t n, double horizon) {
  vmrtk::EventSet es;
  es.events = unpack_spans(packed, n);
  es.horizon = horizon;
  return es;
}

ordered_json spans_to_json(const std::vector<vmrtk::Span>& spans) {
  ordered_json arr = ordered_json::array();
  for (const vmrtk::Span& s : spans)
    arr.push_back(ordered_json::array({s.center, s.width}));
  return arr;
}

ordered_json intervals_to_json(const std::vector<vmrtk::Span>& spans) {
  ordered_json arr = ordered_json::array();
  for (const vmrtk::Span& s : spans)
    arr.push_back(ordered_json::array({s.start(), s.end()}));
  return arr;
}

// "0.55" rather than "0.550000": metric maps are keyed by threshold.
std::string format_threshold(double thr) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", thr);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::vector<std::array<double, 2>> number_pairs(const json& arr,
                                                const char* what) {
  if (!arr.is_array())
    vmrtk::fail(vmrtk::ErrorCode::parse,
                std::string(what) + " must be an array");
  std::vector<std::array<double, 2>> out;
  for (const json& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
        !item[1].is_number())
      vmrtk::fail(vmrtk::ErrorCode::parse,
                  std::string(what) + " entries must be [number, number]");
    out.push_back({item[0].get<double>(), item[1].get<double>()});
  }
  return out;
}

std::vector<vmrtk::Span> spans_from_json(const json& arr, const char* what) {
  std::vector<vmrtk::Span> out;
  for (const auto& [c, w] : number_pairs(arr, what))
    out.push_back(vmrtk::Span{c, w});
  return out;
}

std::vector<vmrtk::Span> intervals_from_json(const json& arr,
                                             const char* what) {
  std::vector<vmrtk::Span> out;
  for (const auto& [lo, hi] : number_pairs(arr, what))
    out.push_back(vmrtk::span_from_interval(lo, hi));
  return out;
}

void reject_unknown_keys(const json& obj, const char* const* known,
                         size_t n_known, const char* what) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (size_t i = 0; i < n_known; ++i) ok = ok || it.key() == known[i];
    if (!ok)
      vmrtk::fail(vmrtk::ErrorCode::parse,
                  std::string("unknown ") + what + " key: " + it.key());
  }
}

vmrtk::DetectorConfig make_detector(int kernel_half, int min_event_len,
                                    double score_threshold, int max_depth) {
  vmrtk::DetectorConfig cfg;
  cfg.kernel_half = kernel_half;
  cfg.min_event_len = min_event_len;
  cfg.score_threshold = score_threshold;
  cfg.max_depth = max_depth;
  return cfg;
}

vmrtk::FrameFeatures frames_from_table(const vmrtk::EmbeddingTable& table,
                                       const std::string& video_id,
                                       double frame_period) {
  vmrtk::FrameFeatures f;
  f.video_id = video_id;
  f.frame_period = frame_period;
  f.features = vmrtk::Matrix(table.count(), table.dim());
  f.features.data = table.values();
  return f;
}

}  // namespace

extern "C" {

const char* vmr_version(void) { return "0.1.0"; }

const char* vmr_last_error(void) { return g_last_error.c_str(); }

void vmr_string_free(char* s) { std::free(s); }

int vmr_set_max_threads(int n) {
  return guard([&] { vmrtk::set_max_threads(n); });
}

int vmr_max_threads(void) { return vmrtk::max_threads(); }

/* ---- Embedding tables ---------------------------------------------------*/

int vmr_table_load(const char* path, int format, vmr_table** out) {
  if (int rc = require(path != nullptr && out != nullptr,
                       "path and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<vmr_table>();
    handle->table = vmrtk::load_table(path, to_format(format, path));
    *out = handle.release();
  });
}

int vmr_table_save(const vmr_table* t, const char* path, int format) {
  if (int rc = require(t != nullptr && path != nullptr,
                       "table and path must not be NULL"))
    return rc;
  return guard(
      [&] { vmrtk::save_table(t->table, path, to_format(format, path)); });
}

int vmr_table_create(const char* const* labels, size_t count, size_t dim,
                     const double* values, vmr_table** out) {
  if (int rc = require(labels != nullptr && values != nullptr && out != nullptr,
                       "labels, values and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    std::vector<std::string> names;
    names.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (labels[i] == nullptr)
        vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                    "label " + std::to_string(i) + " is NULL");
      names.emplace_back(labels[i]);
    }
    std::vector<double> rows(values, values + count * dim);
    auto handle = std::make_unique<vmr_table>();
    handle->table =
        vmrtk::EmbeddingTable(std::move(names), dim, std::move(rows));
    *out = handle.release();
  });
}

void vmr_table_free(vmr_table* t) { delete t; }

size_t vmr_table_count(const vmr_table* t) {
  return t == nullptr ? 0 : t->table.count();
}

size_t vmr_table_dim(const vmr_table* t) {
  return t == nullptr ? 0 : t->table.dim();
}

const char* vmr_table_label(const vmr_table* t, size_t index) {
  if (t == nullptr || index >= t->table.count()) return nullptr;
  return t->table.labels()[index].c_str();
}

int vmr_table_row(const vmr_table* t, size_t index, double* out_dim) {
  if (int rc = require(t != nullptr && out_dim != nullptr,
                       "table and out must not be NULL"))
    return rc;
  return guard([&] {
    if (index >= t->table.count())
      vmrtk::fail(vmrtk::ErrorCode::invalid_argument, "row index out of range");
    std::memcpy(out_dim, t->table.row(index), t->table.dim() * sizeof(double));
  });
}

int vmr_table_normalize(const vmr_table* t, vmr_table** out) {
  if (int rc = require(t != nullptr && out != nullptr,
                       "table and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<vmr_table>();
    handle->table = vmrtk::normalize(t->table);
    *out = handle.release();
  });
}

int vmr_table_similarity(const vmr_table* t, double* out) {
  if (int rc = require(t != nullptr && out != nullptr,
                       "table and out must not be NULL"))
    return rc;
  return guard([&] {
    const vmrtk::Matrix sim = vmrtk::similarity_matrix(t->table);
    std::memcpy(out, sim.data.data(), sim.data.size() * sizeof(double));
  });
}

int vmr_table_cosine(const vmr_table* t, const char* label_a,
                     const char* label_b, double* out) {
  if (int rc = require(t != nullptr && label_a != nullptr &&
                           label_b != nullptr && out != nullptr,
                       "table, labels and out must not be NULL"))
    return rc;
  return guard([&] {
    const auto ia = t->table.find(label_a);
    const auto ib = t->table.find(label_b);
    if (!ia || !ib)
      vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                  std::string("label not found: ") + (!ia ? label_a : label_b));
    *out = vmrtk::cosine(t->table, *ia, *ib);
  });
}

/* ---- Spans, matching, losses --------------------------------------------*/

int vmr_iou(double a_center, double a_width, double b_center, double b_width,
            double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  return guard([&] {
    *out = vmrtk::iou(vmrtk::Span{a_center, a_width},
                      vmrtk::Span{b_center, b_width});
  });
}

int vmr_giou(double a_center, double a_width, double b_center, double b_width,
             double* out) {
  if (int rc = require(out != nullptr, "out must not be NULL")) return rc;
  return guard([&] {
    *out = vmrtk::giou(vmrtk::Span{a_center, a_width},
                       vmrtk::Span{b_center, b_width});
  });
}

int vmr_giou_grad(double a_center, double a_width, double b_center,
                  double b_width, double* value, double* d_center,
                  double* d_width, unsigned* branch) {
  if (int rc =
          require(value != nullptr && d_center != nullptr && d_width != nullptr,
                  "value and gradient outputs must not be NULL"))
    return rc;
  return guard([&] {
    const vmrtk::GiouGrad g = vmrtk::giou_gradient(
        vmrtk::Span{a_center, a_width}, vmrtk::Span{b_center, b_width});
    *value = g.value;
    *d_center = g.d_center;
    *d_width = g.d_width;
    if (branch != nullptr) *branch = g.branch_id;
  });
}

int vmr_hungarian(const double* cost, size_t rows, size_t cols,
                  size_t* out_pairs, size_t* out_n_pairs,
                  double* out_total_cost) {
  if (int rc = require(cost != nullptr && out_pairs != nullptr &&
                           out_n_pairs != nullptr && out_total_cost != nullptr,
                       "cost and outputs must not be NULL"))
    return rc;
  return guard([&] {
    vmrtk::Matrix m(rows, cols);
    m.data.assign(cost, cost + rows * cols);
    const vmrtk::Assignment a = vmrtk::hungarian(m);
    for (size_t i = 0; i < a.pairs.size(); ++i) {
      out_pairs[2 * i] = a.pairs[i].first;
      out_pairs[2 * i + 1] = a.pairs[i].second;
    }
    *out_n_pairs = a.pairs.size();
    *out_total_cost = a.total_cost;
  });
}

int vmr_moment_set_loss(const double* preds, size_t n_preds, const double* gts,
                        size_t n_gts, double lambda_l1, double lambda_iou,
                        double* value, double* grads, size_t* out_pairs,
                        size_t* out_n_pairs) {
  if (int rc = require(preds != nullptr && gts != nullptr && value != nullptr &&
                           grads != nullptr,
                       "spans and outputs must not be NULL"))
    return rc;
  return guard([&] {
    const vmrtk::MomentSetLoss loss = vmrtk::moment_set_loss(
        unpack_spans(preds, n_preds), unpack_spans(gts, n_gts),
        vmrtk::MatchWeights{lambda_l1, lambda_iou});
    *value = loss.report.value;
    for (size_t i = 0; i < n_preds; ++i) {
      grads[2 * i] = loss.report.moment_grads[i].d_center;
      grads[2 * i + 1] = loss.report.moment_grads[i].d_width;
    }
    if (out_pairs != nullptr) {
      for (size_t i = 0; i < loss.assignment.pairs.size(); ++i) {
        out_pairs[2 * i] = loss.assignment.pairs[i].first;
        out_pairs[2 * i + 1] = loss.assignment.pairs[i].second;
      }
    }
    if (out_n_pairs != nullptr) *out_n_pairs = loss.assignment.pairs.size();
  });
}

int vmr_l_evt(const double* preds, size_t n_preds, const double* events,
              size_t n_events, double horizon, double lambda_l1,
              double lambda_iou, int mode, double* value, double* grads) {
  if (int rc = require(preds != nullptr && events != nullptr &&
                           value != nullptr && grads != nullptr,
                       "spans, events and outputs must not be NULL"))
    return rc;
  return guard([&] {
    if (mode != VMR_EVT_BEST_IOU && mode != VMR_EVT_ALL_EVENTS)
      vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                  "mode must be VMR_EVT_BEST_IOU or VMR_EVT_ALL_EVENTS");
    vmrtk::RegulationWeights w;
    w.lambda_l1 = lambda_l1;
    w.lambda_iou = lambda_iou;
    const vmrtk::LossReport r = vmrtk::l_evt(
        unpack_spans(preds, n_preds), unpack_events(events, n_events, horizon),
        w,
        mode == VMR_EVT_BEST_IOU ? vmrtk::EvtMode::best_iou
                                 : vmrtk::EvtMode::all_events);
    *value = r.value;
    for (size_t i = 0; i < n_preds; ++i) {
      grads[2 * i] = r.moment_grads[i].d_center;
      grads[2 * i + 1] = r.moment_grads[i].d_width;
    }
  });
}

int vmr_l_pos(const double* pos, size_t t_frames, size_t dim,
              double frame_period, const double* events, size_t n_events,
              double horizon, double* value, double* grads, int* saturated) {
  if (int rc = require(pos != nullptr && events != nullptr &&
                           value != nullptr && grads != nullptr,
                       "table, events and outputs must not be NULL"))
    return rc;
  return guard([&] {
    vmrtk::Matrix m(t_frames, dim);
    m.data.assign(pos, pos + t_frames * dim);
    const vmrtk::LossReport r =
        vmrtk::l_pos(vmrtk::PositionEmbeddings{std::move(m), frame_period},
                     unpack_events(events, n_events, horizon));
    *value = r.value;
    std::memcpy(grads, r.position_grads.data(),
                r.position_grads.size() * sizeof(double));
    if (saturated != nullptr) *saturated = r.saturated ? 1 : 0;
  });
}

int vmr_loss_eval_json(const char* request_json, char** out_json) {
  if (int rc = require(request_json != nullptr && out_json != nullptr,
                       "request and out must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const json req = json::parse(request_json, nullptr, false);
    if (req.is_discarded() || !req.is_object())
      vmrtk::fail(vmrtk::ErrorCode::parse, "request is not a JSON object");
    static const char* known[] = {"preds", "gts",     "events",
                                  "pos",   "weights", "evt_mode"};
    reject_unknown_keys(req, known, std::size(known), "request");
    if (!req.contains("preds"))
      vmrtk::fail(vmrtk::ErrorCode::parse, "request needs a preds array");
    const std::vector<vmrtk::Span> preds =
        spans_from_json(req["preds"], "preds");

    vmrtk::RegulationWeights w;
    if (req.contains("weights")) {
      const json& jw = req["weights"];
      if (!jw.is_object())
        vmrtk::fail(vmrtk::ErrorCode::parse, "weights must be an object");
      for (auto it = jw.begin(); it != jw.end(); ++it) {
        if (!it.value().is_number())
          vmrtk::fail(vmrtk::ErrorCode::parse,
                      "weight " + it.key() + " must be a number");
        const double v = it.value().get<double>();
        if (it.key() == "lambda_l1") w.lambda_l1 = v;
        else if (it.key() == "lambda_iou") w.lambda_iou = v;
        else if (it.key() == "lambda_e") w.lambda_e = v;
        else if (it.key() == "lambda_p") w.lambda_p = v;
        else
          vmrtk::fail(vmrtk::ErrorCode::parse, "unknown weight: " + it.key());
      }
    }
    vmrtk::EvtMode mode = vmrtk::EvtMode::best_iou;
    if (req.contains("evt_mode")) {
      if (!req["evt_mode"].is_string())
        vmrtk::fail(vmrtk::ErrorCode::parse, "evt_mode must be a string");
      const std::string s = req["evt_mode"].get<std::string>();
      if (s == "best_iou") mode = vmrtk::EvtMode::best_iou;
      else if (s == "all_events") mode = vmrtk::EvtMode::all_events;
      else
        vmrtk::fail(vmrtk::ErrorCode::parse,
                    "evt_mode must be best_iou or all_events");
    }

    vmrtk::MomentSetLoss mnt;
    bool have_mnt = false;
    if (req.contains("gts")) {
      mnt = vmrtk::moment_set_loss(
          preds, spans_from_json(req["gts"], "gts"),
          vmrtk::MatchWeights{w.lambda_l1, w.lambda_iou});
      have_mnt = true;
    }

    vmrtk::EventSet events;
    bool have_events = false;
    if (req.contains("events")) {
      const json& je = req["events"];
      if (!je.is_object() || !je.contains("horizon") ||
          !je["horizon"].is_number() || !je.contains("spans"))
        vmrtk::fail(vmrtk::ErrorCode::parse, "events must be {horizon, spans}");
      events.horizon = je["horizon"].get<double>();
      events.events = intervals_from_json(je["spans"], "events.spans");
      have_events = true;
    }

    vmrtk::LossReport evt;
    if (have_events) evt = vmrtk::l_evt(preds, events, w, mode);

    vmrtk::LossReport pos;
    bool have_pos = false;
    size_t pos_dim = 0;
    if (req.contains("pos")) {
      if (!have_events)
        vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                    "position loss requires events");
      const json& jp = req["pos"];
      if (!jp.is_object() || !jp.contains("frame_period") ||
          !jp["frame_period"].is_number() || !jp.contains("table") ||
          !jp["table"].is_array() || jp["table"].empty())
        vmrtk::fail(vmrtk::ErrorCode::parse,
                    "pos must be {frame_period, table: [[...],...]}");
      const size_t t = jp["table"].size();
      const size_t d = jp["table"][0].is_array() ? jp["table"][0].size() : 0;
      if (d == 0)
        vmrtk::fail(vmrtk::ErrorCode::parse, "pos.table rows must be arrays");
      vmrtk::Matrix m(t, d);
      for (size_t i = 0; i < t; ++i) {
        const json& row = jp["table"][i];
        if (!row.is_array() || row.size() != d)
          vmrtk::fail(vmrtk::ErrorCode::parse, "pos.table rows are ragged");
        for (size_t j = 0; j < d; ++j) {
          if (!row[j].is_number())
            vmrtk::fail(vmrtk::ErrorCode::parse,
                        "pos.table entries must be numbers");
          m.at(i, j) = row[j].get<double>();
        }
      }
      pos = vmrtk::l_pos(
          vmrtk::PositionEmbeddings{std::move(m),
                                    jp["frame_period"].get<double>()},
          events);
      have_pos = true;
      pos_dim = d;
    }

    if (!have_mnt && !have_events)
      vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                  "request needs gts and/or events");

    const vmrtk::LossReport total = vmrtk::total_loss(
        have_mnt ? mnt.report : vmrtk::LossReport{}, evt, pos, w);

    ordered_json out;
    out["value"] = total.value;
    out["per_term"] = ordered_json{{"moment", total.per_term[0]},
                                   {"event", total.per_term[1]},
                                   {"position", total.per_term[2]}};
    ordered_json mg = ordered_json::array();
    for (const vmrtk::SpanGrad& g : total.moment_grads)
      mg.push_back(ordered_json::array({g.d_center, g.d_width}));
    out["moment_grads"] = mg;
    if (have_pos) {
      ordered_json pg = ordered_json::array();
      for (size_t i = 0; i < total.position_grads.size(); i += pos_dim) {
        ordered_json row = ordered_json::array();
        for (size_t j = 0; j < pos_dim; ++j)
          row.push_back(total.position_grads[i + j]);
        pg.push_back(row);
      }
      out["position_grads"] = pg;
    }
    out["saturated"] = total.saturated;
    if (have_mnt) {
      ordered_json pairs = ordered_json::array();
      for (const auto& [p, g] : mnt.assignment.pairs)
        pairs.push_back(ordered_json::array({p, g}));
      out["assignment"] = pairs;
    }
    emit_json(out, out_json);
  });
}

int vmr_gradcheck_suite(uint64_t seed, size_t points_per_loss,
                        double tolerance, char** out_json) {
  if (int rc = require(out_json != nullptr, "out must not be NULL")) return rc;
  *out_json = nullptr;
  return guard([&] {
    const vmrtk::GradSuiteReport report =
        vmrtk::run_gradcheck_suite(seed, points_per_loss, tolerance);
    ordered_json out;
    out["passed"] = report.passed;
    out["tolerance"] = report.tolerance;
    ordered_json checks = ordered_json::array();
    for (const vmrtk::GradSuiteEntry& e : report.entries) {
      ordered_json c;
      c["name"] = e.name;
      c["max_rel_err"] = e.result.max_rel_err;
      c["n_checked"] = e.result.n_checked;
      c["n_skipped"] = e.result.n_skipped;
      checks.push_back(c);
    }
    out["checks"] = checks;
    emit_json(out, out_json);
  });
}

/* ---- Event detection ----------------------------------------------------*/

int vmr_detect_events(const vmr_table* frames, double frame_period,
                      int kernel_half, int min_event_len,
                      double score_threshold, int max_depth, char** out_json) {
  if (int rc = require(frames != nullptr && out_json != nullptr,
                       "frames and out must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const vmrtk::FrameFeatures f =
        frames_from_table(frames->table, "frames", frame_period);
    const vmrtk::DetectorConfig cfg =
        make_detector(kernel_half, min_event_len, score_threshold, max_depth);
    const vmrtk::EventSet events = vmrtk::detect_events(f, cfg);
    ordered_json out;
    out["horizon"] = events.horizon;
    out["events"] = intervals_to_json(events.events);
    out["boundary_scores"] =
        vmrtk::boundary_scores(vmrtk::tsm(f), cfg.kernel_half);
    emit_json(out, out_json);
  });
}

int vmr_detect_events_file(const char* features_path, int format,
                           const char* video_id, double frame_period,
                           int kernel_half, int min_event_len,
                           double score_threshold, int max_depth,
                           const char* out_path, char** out_json) {
  if (int rc = require(features_path != nullptr && video_id != nullptr,
                       "features_path and video_id must not be NULL"))
    return rc;
  if (out_json != nullptr) *out_json = nullptr;
  return guard([&] {
    const vmrtk::EmbeddingTable table =
        vmrtk::load_table(features_path, to_format(format, features_path));
    const vmrtk::FrameFeatures f =
        frames_from_table(table, video_id, frame_period);
    const vmrtk::DetectorConfig cfg =
        make_detector(kernel_half, min_event_len, score_threshold, max_depth);

    vmrtk::VideoEvents ve;
    ve.video_id = video_id;
    ve.events = vmrtk::detect_events(f, cfg);
    ve.boundary_scores = vmrtk::boundary_scores(vmrtk::tsm(f), cfg.kernel_half);
    if (out_path != nullptr) vmrtk::save_events_jsonl({ve}, out_path);

    if (out_json != nullptr) {
      ordered_json out;
      out["video_id"] = ve.video_id;
      out["horizon"] = ve.events.horizon;
      out["events"] = intervals_to_json(ve.events.events);
      out["boundary_scores"] = ve.boundary_scores;
      emit_json(out, out_json);
    }
  });
}

/* ---- Relation feasibility -----------------------------------------------*/

int vmr_classify_triplet(const vmr_table* t, const char* paired_a,
                         const char* paired_b, const char* outlier,
                         int* reasonable, double* paired_sim,
                         double* max_unpaired_sim) {
  if (int rc = require(t != nullptr && paired_a != nullptr &&
                           paired_b != nullptr && outlier != nullptr,
                       "table and labels must not be NULL"))
    return rc;
  return guard([&] {
    const vmrtk::TripletVerdict v = vmrtk::classify_triplet(
        t->table, vmrtk::Triplet{paired_a, paired_b, outlier});
    if (reasonable != nullptr) *reasonable = v.reasonable ? 1 : 0;
    if (paired_sim != nullptr) *paired_sim = v.paired_sim;
    if (max_unpaired_sim != nullptr) *max_unpaired_sim = v.max_unpaired_sim;
  });
}

int vmr_synth_nontextual(const char* const* labels, size_t count, size_t dim,
                         uint64_t seed, vmr_table** out) {
  if (int rc = require(labels != nullptr && out != nullptr,
                       "labels and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    std::vector<std::string> names;
    names.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (labels[i] == nullptr)
        vmrtk::fail(vmrtk::ErrorCode::invalid_argument,
                    "label " + std::to_string(i) + " is NULL");
      names.emplace_back(labels[i]);
    }
    auto handle = std::make_unique<vmr_table>();
    handle->table = vmrtk::synth_nontextual(names, dim, seed);
    *out = handle.release();
  });
}

int vmr_distort(const vmr_table* t, double p, uint64_t seed, vmr_table** out) {
  if (int rc = require(t != nullptr && out != nullptr,
                       "table and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<vmr_table>();
    handle->table = vmrtk::distort(t->table, p, seed);
    *out = handle.release();
  });
}

int vmr_fuse(const vmr_table* text, const vmr_table* nontext, double alpha,
             vmr_table** out) {
  if (int rc = require(text != nullptr && nontext != nullptr && out != nullptr,
                       "tables and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<vmr_table>();
    handle->table = vmrtk::fuse(text->table, nontext->table, alpha);
    *out = handle.release();
  });
}

int vmr_scaling_check(size_t dim, double alpha, size_t n_pairs, uint64_t seed,
                      double rho, double* empirical_ratio, double* predicted,
                      double* mean_base, double* mean_fused) {
  if (int rc = require(empirical_ratio != nullptr,
                       "empirical_ratio must not be NULL"))
    return rc;
  return guard([&] {
    const vmrtk::ScalingCheck c =
        vmrtk::expectation_scaling_check(dim, alpha, n_pairs, seed, rho);
    *empirical_ratio = c.empirical_ratio;
    if (predicted != nullptr) *predicted = c.predicted;
    if (mean_base != nullptr) *mean_base = c.mean_base;
    if (mean_fused != nullptr) *mean_fused = c.mean_fused;
  });
}

int vmr_scaling_curve(size_t dim, const double* alphas, size_t n_alphas,
                      size_t n_pairs, uint64_t seed, double rho,
                      char** out_json) {
  if (int rc = require(alphas != nullptr && out_json != nullptr,
                       "alphas and out_json must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const std::vector<vmrtk::ScalingCheck> curve = vmrtk::scaling_curve(
        dim, std::vector<double>(alphas, alphas + n_alphas), n_pairs, seed,
        rho);
    ordered_json cells = ordered_json::array();
    for (std::size_t a = 0; a < curve.size(); ++a) {
      ordered_json cell;
      cell["alpha"] = alphas[a];
      cell["predicted"] = curve[a].predicted;
      cell["empirical_ratio"] = curve[a].empirical_ratio;
      cell["mean_base"] = curve[a].mean_base;
      cell["mean_fused"] = curve[a].mean_fused;
      cells.push_back(cell);
    }
    ordered_json doc;
    doc["cells"] = cells;
    emit_json(doc, out_json);
  });
}

int vmr_make_triplet_geometry(const char* triplets_path, size_t dim,
                              double unreasonable_frac, uint64_t seed,
                              vmr_table** out) {
  if (int rc = require(triplets_path != nullptr && out != nullptr,
                       "triplets_path and out must not be NULL"))
    return rc;
  *out = nullptr;
  return guard([&] {
    const std::vector<vmrtk::Triplet> triplets =
        vmrtk::load_triplets(triplets_path);
    auto handle = std::make_unique<vmr_table>();
    handle->table =
        vmrtk::make_triplet_geometry(triplets, dim, unreasonable_frac, seed);
    *out = handle.release();
  });
}

int vmr_refine_study(const vmr_table* text, const char* triplets_path,
                     const char* refiner_spec, const double* alphas,
                     size_t n_alphas, const double* ps, size_t n_ps,
                     uint64_t seed, char** out_json) {
  if (int rc = require(text != nullptr && triplets_path != nullptr &&
                           refiner_spec != nullptr && alphas != nullptr &&
                           ps != nullptr && out_json != nullptr,
                       "inputs and out must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const std::vector<vmrtk::Triplet> triplets =
        vmrtk::load_triplets(triplets_path);
    const std::unique_ptr<vmrtk::Refiner> refiner =
        vmrtk::make_refiner(refiner_spec);
    const std::vector<vmrtk::RefineReport> cells = vmrtk::run_refine_study(
        text->table, triplets, *refiner,
        std::vector<double>(alphas, alphas + n_alphas),
        std::vector<double>(ps, ps + n_ps), seed);
    ordered_json out;
    ordered_json arr = ordered_json::array();
    for (const vmrtk::RefineReport& r : cells) {
      ordered_json c;
      c["alpha"] = r.alpha;
      c["p"] = r.p;
      c["n_triplets"] = r.n_triplets;
      c["n_unreasonable_before"] = r.n_unreasonable_before;
      c["n_improved"] = r.n_improved;
      c["n_deteriorated"] = r.n_deteriorated;
      c["improved_proportion"] = r.improved_proportion;
      c["deteriorated_proportion"] = r.deteriorated_proportion;
      arr.push_back(c);
    }
    out["cells"] = arr;
    emit_json(out, out_json);
  });
}

/* ---- Retrieval metrics --------------------------------------------------*/

int vmr_eval_mr_files(const char* preds_jsonl, const char* gts_jsonl,
                      char** out_json) {
  if (int rc = require(preds_jsonl != nullptr && gts_jsonl != nullptr &&
                           out_json != nullptr,
                       "paths and out must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const vmrtk::MrReport report =
        vmrtk::evaluate_mr(vmrtk::load_predictions_jsonl(preds_jsonl),
                           vmrtk::load_ground_truth_jsonl(gts_jsonl));
    ordered_json out;
    out["n_videos"] = report.n_videos;
    ordered_json r1 = ordered_json::object();
    for (const auto& [thr, v] : report.r1) r1[format_threshold(thr)] = v;
    out["r1"] = r1;
    ordered_json map = ordered_json::object();
    for (const auto& [thr, v] : report.map_at) map[format_threshold(thr)] = v;
    out["map"] = map;
    out["map_avg"] = report.map_avg;
    emit_json(out, out_json);
  });
}

int vmr_eval_hd_file(const char* annotations_jsonl, char** out_json) {
  if (int rc = require(annotations_jsonl != nullptr && out_json != nullptr,
                       "path and out must not be NULL"))
    return rc;
  *out_json = nullptr;
  return guard([&] {
    const vmrtk::HighlightResult r = vmrtk::highlight_metrics(
        vmrtk::load_highlight_jsonl(annotations_jsonl));
    ordered_json out;
    out["hd_map"] = r.hd_map;
    out["hit_at_1"] = r.hit_at_1;
    out["n_videos"] = r.n_videos;
    out["n_excluded"] = r.n_excluded;
    emit_json(out, out_json);
  });
}

/* ---- Synthetic end-to-end experiment ------------------------------------*/

int vmr_synth_ablation(const char* config_json, char** out_json) {
  if (int rc = require(out_json != nullptr, "out must not be NULL")) return rc;
  *out_json = nullptr;
  return guard([&] {
    vmrtk::SynthConfig cfg;
    vmrtk::TrainHyper hyper;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    json req = json::object();
    if (config_json != nullptr && config_json[0] != '\0') {
      req = json::parse(config_json, nullptr, false);
      if (req.is_discarded() || !req.is_object())
        vmrtk::fail(vmrtk::ErrorCode::parse, "config is not a JSON object");
    }
    static const char* known[] = {
        "n_videos",      "t_frames",        "dim",       "min_events",
        "max_events",    "noise_sigma",     "lr",        "epochs",
        "slots",         "attn_sharpness",  "pos_dim",   "lambda_l1",
        "lambda_iou",    "lambda_e",        "lambda_p",  "kernel_half",
        "min_event_len", "score_threshold", "max_depth", "seeds"};
    reject_unknown_keys(req, known, std::size(known), "config");
    auto num = [&](const char* key, auto& field) {
      if (!req.contains(key)) return;
      const json& v = req[key];
      if (!v.is_number())
        vmrtk::fail(vmrtk::ErrorCode::parse,
                    std::string(key) + " must be a number");
      field = v.get<std::decay_t<decltype(field)>>();
    };
    num("n_videos", cfg.n_videos);
    num("t_frames", cfg.t_frames);
    num("dim", cfg.dim);
    num("min_events", cfg.min_events);
    num("max_events", cfg.max_events);
    num("noise_sigma", cfg.noise_sigma);
    num("lr", hyper.lr);
    num("epochs", hyper.epochs);
    num("slots", hyper.slots);
    num("attn_sharpness", hyper.attn_sharpness);
    num("pos_dim", hyper.pos_dim);
    num("lambda_l1", hyper.match.lambda_l1);
    num("lambda_iou", hyper.match.lambda_iou);
    num("lambda_e", hyper.reg.lambda_e);
    num("lambda_p", hyper.reg.lambda_p);
    num("kernel_half", hyper.detector.kernel_half);
    num("min_event_len", hyper.detector.min_event_len);
    num("score_threshold", hyper.detector.score_threshold);
    num("max_depth", hyper.detector.max_depth);
    hyper.reg.lambda_l1 = hyper.match.lambda_l1;
    hyper.reg.lambda_iou = hyper.match.lambda_iou;
    if (req.contains("seeds")) {
      if (!req["seeds"].is_array() || req["seeds"].empty())
        vmrtk::fail(vmrtk::ErrorCode::parse, "seeds must be a non-empty array");
      seeds.clear();
      for (const json& s : req["seeds"]) {
        if (!s.is_number_unsigned())
          vmrtk::fail(vmrtk::ErrorCode::parse,
                      "seeds must be unsigned integers");
        seeds.push_back(s.get<std::uint64_t>());
      }
    }

    const vmrtk::AblationReport report = vmrtk::run_ablation(cfg, hyper, seeds);

    ordered_json out;
    ordered_json jc;
    jc["n_videos"] = cfg.n_videos;
    jc["t_frames"] = cfg.t_frames;
    jc["dim"] = cfg.dim;
    jc["min_events"] = cfg.min_events;
    jc["max_events"] = cfg.max_events;
    jc["noise_sigma"] = cfg.noise_sigma;
    jc["lr"] = hyper.lr;
    jc["epochs"] = hyper.epochs;
    jc["slots"] = hyper.slots;
    jc["attn_sharpness"] = hyper.attn_sharpness;
    jc["pos_dim"] = hyper.pos_dim;
    jc["lambda_l1"] = hyper.match.lambda_l1;
    jc["lambda_iou"] = hyper.match.lambda_iou;
    jc["lambda_e"] = hyper.reg.lambda_e;
    jc["lambda_p"] = hyper.reg.lambda_p;
    jc["kernel_half"] = hyper.detector.kernel_half;
    jc["min_event_len"] = hyper.detector.min_event_len;
    jc["score_threshold"] = hyper.detector.score_threshold;
    jc["max_depth"] = hyper.detector.max_depth;
    jc["seeds"] = seeds;
    out["config"] = jc;

    ordered_json cells = ordered_json::array();
    for (const vmrtk::AblationCell& cell : report.cells) {
      ordered_json c;
      c["use_evt"] = cell.toggles.use_evt;
      c["use_pos"] = cell.toggles.use_pos;
      c["seed"] = cell.seed;
      c["mean_iou"] = cell.mean_iou;
      c["crossing_rate"] = cell.crossing_rate;
      c["loss_curve"] = cell.loss_curve;
      if (!cell.first_video_preds.empty())
        c["first_video_preds"] = spans_to_json(cell.first_video_preds);
      cells.push_back(c);
    }
    out["cells"] = cells;

    ordered_json summaries = ordered_json::array();
    for (const vmrtk::AblationSummary& s : report.summaries) {
      ordered_json j;
      j["use_evt"] = s.toggles.use_evt;
      j["use_pos"] = s.toggles.use_pos;
      j["mean_iou"] = s.mean_iou;
      j["mean_crossing_rate"] = s.mean_crossing_rate;
      summaries.push_back(j);
    }
    out["summaries"] = summaries;

    ordered_json fv;
    fv["horizon"] = report.first_video_events.horizon;
    fv["events"] = intervals_to_json(report.first_video_events.events);
    fv["gt"] = spans_to_json(report.first_video_gt);
    out["first_video"] = fv;

    emit_json(out, out_json);
  });
}

} /* extern "C" */
