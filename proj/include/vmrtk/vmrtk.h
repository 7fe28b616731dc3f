/* Copyright 2026 The vmrtk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the vmrtk core library.
 *
 * Conventions:
 *   - Every fallible function returns an int status: 0 on success, otherwise
 *     one of the VMR_ERR_* codes below. The accompanying message is kept in
 *     thread-local storage and readable via vmr_last_error().
 *   - Strings returned through char** are heap-allocated; release them with
 *     vmr_string_free(). Tables returned through vmr_table** are released
 *     with vmr_table_free().
 *   - Spans are (center, width) pairs of doubles; packed span arrays are laid
 *     out [c0, w0, c1, w1, ...]. Event partitions are packed the same way
 *     plus an explicit horizon.
 *   - Structured results (study grids, event sets, metric reports, ablation
 *     reports) are returned as JSON text; the schemas are documented on the
 *     functions that produce them.
 */

#ifndef VMRTK_VMRTK_H_
#define VMRTK_VMRTK_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VMR_API __declspec(dllexport)
#else
#define VMR_API __attribute__((visibility("default")))
#endif

enum {
  VMR_OK = 0,
  VMR_ERR_INVALID_ARGUMENT = 1,
  VMR_ERR_IO = 2,
  VMR_ERR_PARSE = 3,
  VMR_ERR_CONTRACT = 4,
  VMR_ERR_NUMERIC = 5,
  VMR_ERR_INTERNAL = 6
};

enum {
  VMR_FORMAT_AUTO = 0,
  VMR_FORMAT_BINARY = 1, /* .emb: JSON header line + float32 rows */
  VMR_FORMAT_CSV = 2     /* label,v0,...,v{D-1}, no header row */
};

enum { VMR_EVT_BEST_IOU = 0, VMR_EVT_ALL_EVENTS = 1 };

/* Version string of the library, e.g. "0.1.0". Static storage; do not free. */
VMR_API const char* vmr_version(void);

/* Message of the most recent error on this thread ("" if none). Static
 * storage; valid until the next failing call on the same thread. */
VMR_API const char* vmr_last_error(void);

VMR_API void vmr_string_free(char* s);

/* Caps worker threads used by parallel operations (>= 1). Default is 1. */
VMR_API int vmr_set_max_threads(int n);
VMR_API int vmr_max_threads(void);

/* ---- Embedding tables ---------------------------------------------------*/

typedef struct vmr_table vmr_table;

VMR_API int vmr_table_load(const char* path, int format, vmr_table** out);
VMR_API int vmr_table_save(const vmr_table* t, const char* path, int format);
VMR_API int vmr_table_create(const char* const* labels, size_t count,
                             size_t dim, const double* values,
                             vmr_table** out);
VMR_API void vmr_table_free(vmr_table* t);

VMR_API size_t vmr_table_count(const vmr_table* t);
VMR_API size_t vmr_table_dim(const vmr_table* t);
/* Borrowed pointer, valid while the table lives. NULL if out of range. */
VMR_API const char* vmr_table_label(const vmr_table* t, size_t index);
VMR_API int vmr_table_row(const vmr_table* t, size_t index, double* out_dim);

VMR_API int vmr_table_normalize(const vmr_table* t, vmr_table** out);
/* out must hold count*count doubles (row-major cosine matrix). */
VMR_API int vmr_table_similarity(const vmr_table* t, double* out);
VMR_API int vmr_table_cosine(const vmr_table* t, const char* label_a,
                             const char* label_b, double* out);

/* ---- Spans, matching, losses --------------------------------------------*/

VMR_API int vmr_iou(double a_center, double a_width, double b_center,
                    double b_width, double* out);
VMR_API int vmr_giou(double a_center, double a_width, double b_center,
                     double b_width, double* out);
/* Gradient of giou w.r.t. the first span. branch identifies the active
 * piecewise-linear region (for kink detection in finite-difference tests). */
VMR_API int vmr_giou_grad(double a_center, double a_width, double b_center,
                          double b_width, double* value, double* d_center,
                          double* d_width, unsigned* branch);

/* Minimum-cost one-to-one assignment of min(rows, cols) pairs; among optimal
 * assignments the lexicographically smallest pair list is returned. out_pairs
 * must hold 2*min(rows, cols) entries, written (row, col) in ascending row
 * order. */
VMR_API int vmr_hungarian(const double* cost, size_t rows, size_t cols,
                          size_t* out_pairs, size_t* out_n_pairs,
                          double* out_total_cost);

/* Set-matching loss between predicted spans and ground-truth spans. grads
 * must hold 2*n_preds entries ((d_center, d_width) per slot, zero for
 * unmatched slots); pairs as in vmr_hungarian (pred index, gt index). */
VMR_API int vmr_moment_set_loss(const double* preds, size_t n_preds,
                                const double* gts, size_t n_gts,
                                double lambda_l1, double lambda_iou,
                                double* value, double* grads,
                                size_t* out_pairs, size_t* out_n_pairs);

/* Event-alignment regulation loss. events are the packed spans of a
 * contiguous partition of [0, horizon]. mode is VMR_EVT_*. grads as above. */
VMR_API int vmr_l_evt(const double* preds, size_t n_preds,
                      const double* events, size_t n_events, double horizon,
                      double lambda_l1, double lambda_iou, int mode,
                      double* value, double* grads);

/* Position-embedding compactness loss. pos is row-major t_frames x dim.
 * grads must hold t_frames*dim entries. saturated reports whether any
 * exponent hit the overflow clamp (gradient zeroed there). */
VMR_API int vmr_l_pos(const double* pos, size_t t_frames, size_t dim,
                      double frame_period, const double* events,
                      size_t n_events, double horizon, double* value,
                      double* grads, int* saturated);

/* Combined loss evaluation with a JSON request/response, mirroring the CLI
 * `loss eval` subcommand. Request schema:
 *   {"preds": [[c,w],...], "gts": [[c,w],...]?,
 *    "events": {"horizon": H, "spans": [[start,end],...]}?,
 *    "pos": {"frame_period": P, "table": [[...],...]}?,
 *    "weights": {"lambda_l1","lambda_iou","lambda_e","lambda_p"}?,
 *    "evt_mode": "best_iou"|"all_events"?}
 * Response: {"value", "per_term": {"moment","event","position"},
 *            "moment_grads": [[dc,dw],...], "position_grads": [[...],...]?,
 *            "saturated": bool, "assignment": [[pred,gt],...]?}. */
VMR_API int vmr_loss_eval_json(const char* request_json, char** out_json);

/* Finite-difference verification of every analytic gradient in the library.
 * Response: {"passed": bool, "tolerance": tol, "checks": [{"name",
 * "max_rel_err", "n_checked", "n_skipped"},...]}. A false "passed" still
 * returns VMR_OK; inspect the JSON. */
VMR_API int vmr_gradcheck_suite(uint64_t seed, size_t points_per_loss,
                                double tolerance, char** out_json);

/* ---- Event detection ----------------------------------------------------*/

/* Frames are the rows of a table (labels are frame names). Detects the
 * event partition by recursive self-similarity bisection. Response:
 *   {"horizon", "events": [[start,end],...], "boundary_scores": [...]}
 * boundary_scores are the whole-video scores (length t_frames-1), emitted as
 * a diagnostic. */
VMR_API int vmr_detect_events(const vmr_table* frames, double frame_period,
                              int kernel_half, int min_event_len,
                              double score_threshold, int max_depth,
                              char** out_json);

/* Same detection, reading frames from a table file and writing out_path as a
 * one-line JSONL file {"video_id","events","boundary_scores"} (overwritten
 * on every run). out_path and out_json may each be NULL. */
VMR_API int vmr_detect_events_file(const char* features_path, int format,
                                   const char* video_id, double frame_period,
                                   int kernel_half, int min_event_len,
                                   double score_threshold, int max_depth,
                                   const char* out_path, char** out_json);

/* ---- Relation feasibility -----------------------------------------------*/

VMR_API int vmr_classify_triplet(const vmr_table* t, const char* paired_a,
                                 const char* paired_b, const char* outlier,
                                 int* reasonable, double* paired_sim,
                                 double* max_unpaired_sim);

/* Deterministic unit-vector embedding per label (order-independent). */
VMR_API int vmr_synth_nontextual(const char* const* labels, size_t count,
                                 size_t dim, uint64_t seed, vmr_table** out);

/* Zeroes each coordinate independently with probability p (seeded, no
 * renormalization). */
VMR_API int vmr_distort(const vmr_table* t, double p, uint64_t seed,
                        vmr_table** out);

/* (1-alpha)*text + alpha*nontext, requiring identical labels and dim. */
VMR_API int vmr_fuse(const vmr_table* text, const vmr_table* nontext,
                     double alpha, vmr_table** out);

/* Monte-carlo check of the fused-similarity scaling law. empirical_ratio
 * should approach predicted = (1-alpha)^2 as n_pairs grows. */
VMR_API int vmr_scaling_check(size_t dim, double alpha, size_t n_pairs,
                              uint64_t seed, double rho,
                              double* empirical_ratio, double* predicted,
                              double* mean_base, double* mean_fused);

/* vmr_scaling_check over a list of alphas sharing one sample. Entry i is
 * bit-identical to a vmr_scaling_check call with alphas[i] and the same seed.
 * Response: {"cells": [{"alpha","predicted","empirical_ratio","mean_base",
 * "mean_fused"}, ...]} in alphas order. Caller frees *out_json. */
VMR_API int vmr_scaling_curve(size_t dim, const double* alphas,
                              size_t n_alphas, size_t n_pairs, uint64_t seed,
                              double rho, char** out_json);

/* Synthesizes embeddings realizing the requested fraction of unreasonable
 * triplets (labels drawn from the triplet file; every label distinct). */
VMR_API int vmr_make_triplet_geometry(const char* triplets_path, size_t dim,
                                      double unreasonable_frac, uint64_t seed,
                                      vmr_table** out);

/* Full distortion/fusion/refinement grid over alphas x ps. refiner_spec is
 * one of "identity", "toy:<weights.json>", "toy-random:<seed>[:<layers>]",
 * "external:<command>". Response: {"cells": [{"alpha","p","n_triplets",
 * "n_unreasonable_before","n_improved","n_deteriorated",
 * "improved_proportion","deteriorated_proportion"},...]} with cells in
 * alpha-major order. */
VMR_API int vmr_refine_study(const vmr_table* text, const char* triplets_path,
                             const char* refiner_spec, const double* alphas,
                             size_t n_alphas, const double* ps, size_t n_ps,
                             uint64_t seed, char** out_json);

/* ---- Retrieval metrics --------------------------------------------------*/

/* Moment-retrieval metrics from JSONL files (schemas: predictions are
 * {"video_id","spans":[[s,e],...],"scores":[...]}, ground truth is
 * {"video_id","spans":[[s,e],...]}). Response: {"n_videos",
 * "r1": {"0.5": v, "0.7": v}, "map": {"<thr>": v, ...}, "map_avg"}. */
VMR_API int vmr_eval_mr_files(const char* preds_jsonl, const char* gts_jsonl,
                              char** out_json);

/* Highlight metrics from a JSONL file of {"video_id","labels":[0..4,...],
 * "scores":[...]}. Response: {"hd_map","hit_at_1","n_videos","n_excluded"}. */
VMR_API int vmr_eval_hd_file(const char* annotations_jsonl, char** out_json);

/* ---- Synthetic end-to-end experiment ------------------------------------*/

/* Runs the regulation-ablation grid. config_json (all fields optional):
 *   {"n_videos","t_frames","dim","min_events","max_events","noise_sigma",
 *    "lr","epochs","slots","attn_sharpness","pos_dim",
 *    "lambda_l1","lambda_iou","lambda_e","lambda_p",
 *    "kernel_half","min_event_len","score_threshold","max_depth",
 *    "seeds":[...]}
 * Response: {"config": {...resolved...}, "cells": [{"use_evt","use_pos",
 * "seed","mean_iou","crossing_rate","loss_curve":[...],
 * "first_video_preds":[[c,w],...]?},...], "summaries": [{"use_evt",
 * "use_pos","mean_iou","mean_crossing_rate"},...], "first_video":
 * {"events":[[s,e],...], "horizon", "gt":[[c,w],...]}}. */
VMR_API int vmr_synth_ablation(const char* config_json, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VMRTK_VMRTK_H_ */
