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

#include "vmrtk/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmrtk/rng.hpp"

namespace vmrtk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment (Jonker-Volgenant flavor) matching all
// rows of an r x c view with r <= c. Returns the matched column per row.
std::vector<int> jv_rows_to_cols(const Matrix& cost,
                                 const std::vector<int>& rows,
                                 const std::vector<int>& cols) {
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(cols.size());
  std::vector<double> u(r + 1, 0.0), v(c + 1, 0.0);
  std::vector<int> p(c + 1, 0), way(c + 1, 0);
  for (int i = 1; i <= r; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(c + 1, kInf);
    std::vector<char> used(c + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= c; ++j) {
        if (used[j]) continue;
        const double cur =
            cost.at(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= c; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(r, -1);
  for (int j = 1; j <= c; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

// Minimal total cost matching every element of the smaller of (rows, cols).
double optimal_cost(const Matrix& cost, const std::vector<int>& rows,
                    const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  double total = 0.0;
  if (rows.size() <= cols.size()) {
    const auto match = jv_rows_to_cols(cost, rows, cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
      total += cost.at(rows[i], cols[match[i]]);
  } else {
    Matrix t(cost.cols, cost.rows);
    for (std::size_t i = 0; i < cost.rows; ++i)
      for (std::size_t j = 0; j < cost.cols; ++j) t.at(j, i) = cost.at(i, j);
    const auto match = jv_rows_to_cols(t, cols, rows);
    for (std::size_t k = 0; k < cols.size(); ++k)
      total += cost.at(rows[match[k]], cols[k]);
  }
  return total;
}

}  // namespace

Assignment hungarian(const Matrix& cost) {
  Assignment out;
  const std::size_t n = cost.rows, m = cost.cols;
  if (n == 0 || m == 0) return out;
  for (double v : cost.data)
    if (!std::isfinite(v))
      fail(ErrorCode::invalid_argument, "hungarian: non-finite cost entry");

  std::vector<int> all_rows(n), all_cols(m);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<int>(i);
  for (std::size_t j = 0; j < m; ++j) all_cols[j] = static_cast<int>(j);
  const double best = optimal_cost(cost, all_rows, all_cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(best));

  // Greedy prefix fixing: walk pred indices in order and take the smallest
  // gt index that still completes to an optimal assignment. This pins the
  // lexicographically smallest optimum without perturbing costs.
  const std::size_t slots = std::min(n, m);
  std::vector<char> col_used(m, 0);
  double prefix = 0.0;
  for (std::size_t i = 0; i < n && out.pairs.size() < slots; ++i) {
    std::vector<int> rest_rows;
    for (std::size_t r = i + 1; r < n; ++r)
      rest_rows.push_back(static_cast<int>(r));
    bool matched = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (col_used[j]) continue;
      std::vector<int> rest_cols;
      for (std::size_t cidx = 0; cidx < m; ++cidx)
        if (!col_used[cidx] && cidx != j)
          rest_cols.push_back(static_cast<int>(cidx));
      const std::size_t slots_left = slots - out.pairs.size() - 1;
      if (std::min(rest_rows.size(), rest_cols.size()) < slots_left) continue;
      const double rest = optimal_cost(cost, rest_rows, rest_cols);
      if (prefix + cost.at(i, j) + rest <= best + tol) {
        out.pairs.emplace_back(i, j);
        col_used[j] = 1;
        prefix += cost.at(i, j);
        matched = true;
        break;
      }
    }
    (void)matched;  // skipping pred i is legal only when n > m
  }

  out.total_cost = 0.0;
  for (const auto& [pi, gj] : out.pairs) out.total_cost += cost.at(pi, gj);
  return out;
}

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Matrix build_cost(const std::vector<Span>& preds, const std::vector<Span>& gts,
                  const MatchWeights& w) {
  Matrix cost(preds.size(), gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double l1 = std::abs(preds[i].center - gts[j].center) +
                        std::abs(preds[i].width - gts[j].width);
      cost.at(i, j) =
          w.lambda_l1 * l1 + w.lambda_iou * (1.0 - giou(preds[i], gts[j]));
    }
  }
  return cost;
}

}  // namespace

MomentSetLoss moment_set_loss(const std::vector<Span>& preds,
                              const std::vector<Span>& gts,
                              const MatchWeights& w) {
  if (gts.empty())
    fail(ErrorCode::invalid_argument,
         "moment_set_loss requires at least one ground-truth span");
  if (w.lambda_l1 < 0.0 || w.lambda_iou < 0.0 ||
      (w.lambda_l1 == 0.0 && w.lambda_iou == 0.0))
    fail(ErrorCode::invalid_argument,
         "match weights must be >= 0 and not both zero");

  MomentSetLoss out;
  out.report.moment_grads.assign(preds.size(), SpanGrad{});
  if (preds.empty()) return out;

  const Matrix cost = build_cost(preds, gts, w);
  out.assignment = hungarian(cost);
  const double k = static_cast<double>(out.assignment.pairs.size());
  for (const auto& [pi, gj] : out.assignment.pairs) {
    const Span& p = preds[pi];
    const Span& g = gts[gj];
    out.report.per_term.push_back(cost.at(pi, gj));
    const GiouGrad gg = giou_gradient(p, g);
    SpanGrad& sg = out.report.moment_grads[pi];
    sg.d_center = (w.lambda_l1 * sign_of(p.center - g.center) -
                   w.lambda_iou * gg.d_center) /
                  k;
    sg.d_width = (w.lambda_l1 * sign_of(p.width - g.width) -
                  w.lambda_iou * gg.d_width) /
                 k;
  }
  out.report.value = out.assignment.total_cost / k;
  return out;
}

std::uint64_t moment_set_loss_branch(const std::vector<Span>& preds,
                                     const std::vector<Span>& gts,
                                     const MatchWeights& w) {
  if (gts.empty() || preds.empty()) return 0;
  const Matrix cost = build_cost(preds, gts, w);
  const Assignment a = hungarian(cost);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    h ^= splitmix64(x);
    h *= 0x100000001b3ULL;
  };
  for (const auto& [pi, gj] : a.pairs) {
    mix(pi);
    mix(gj);
    const Span& p = preds[pi];
    const Span& g = gts[gj];
    mix(static_cast<std::uint64_t>(sign_of(p.center - g.center) + 2.0));
    mix(static_cast<std::uint64_t>(sign_of(p.width - g.width) + 2.0));
    mix(giou_gradient(p, g).branch_id);
  }
  return h;
}

}  // namespace vmrtk
