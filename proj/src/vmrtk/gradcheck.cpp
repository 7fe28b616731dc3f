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

#include "vmrtk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vmrtk {

GradCheckResult check_gradients(const ScalarFn& f, const GradFn& grad,
                                const std::vector<double>& x,
                                const GradCheckConfig& cfg,
                                const BranchFn& branch) {
  if (!f || !grad) fail(ErrorCode::invalid_argument, "check_gradients: null callable");
  if (!(cfg.eps > 0.0))
    fail(ErrorCode::invalid_argument, "check_gradients: eps must be > 0");

  const std::vector<double> g = grad(x);
  if (g.size() != x.size())
    fail(ErrorCode::invalid_argument,
         "check_gradients: gradient size does not match point size");

  GradCheckResult out;
  std::vector<double> probe = x;
  // Central differences of f lose about ulp(|f|)/eps of absolute precision,
  // so the error denominator is floored at rel_floor scaled by |f(x)|.
  const double f0 = f(x);
  if (!std::isfinite(f0))
    fail(ErrorCode::numeric, "check_gradients: non-finite value at the point");
  const double floor = cfg.rel_floor * std::max(1.0, std::abs(f0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (branch) {
      probe[i] = x[i] + cfg.probe_scale * cfg.eps;
      const std::uint64_t hi = branch(probe);
      probe[i] = x[i] - cfg.probe_scale * cfg.eps;
      const std::uint64_t lo = branch(probe);
      probe[i] = x[i];
      if (hi != lo) {
        ++out.n_skipped;
        continue;
      }
    }
    probe[i] = x[i] + cfg.eps;
    const double fp = f(probe);
    probe[i] = x[i] - cfg.eps;
    const double fm = f(probe);
    probe[i] = x[i];
    const double fd = (fp - fm) / (2.0 * cfg.eps);
    if (!std::isfinite(fd) || !std::isfinite(g[i]))
      fail(ErrorCode::numeric, "check_gradients: non-finite value at coordinate " +
                                   std::to_string(i));
    const double rel = std::abs(g[i] - fd) / std::max(std::abs(fd), floor);
    ++out.n_checked;
    if (rel > out.max_rel_err ||
        out.worst_coord == GradCheckResult::kNoCoord) {
      out.max_rel_err = rel;
      out.worst_coord = i;
    }
  }
  return out;
}

}  // namespace vmrtk
