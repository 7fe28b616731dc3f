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
#include <functional>
#include <vector>

#include "vmrtk/common.hpp"

namespace vmrtk {

struct GradCheckConfig {
  double eps = 1e-6;        // central-difference step
  double rel_floor = 1e-6;  // denominator floor for the relative error
  double probe_scale = 10.0;  // kink probes are taken at x +- probe_scale*eps
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_coord = kNoCoord;
  std::size_t n_checked = 0;
  std::size_t n_skipped = 0;

  static constexpr std::size_t kNoCoord = static_cast<std::size_t>(-1);
};

using ScalarFn = std::function<double(const std::vector<double>&)>;
using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;
// Identifies the smooth piece a point lies on. Coordinates whose probe points
// land on different pieces are skipped: central differences across a kink say
// nothing about either one-sided gradient.
using BranchFn = std::function<std::uint64_t(const std::vector<double>&)>;

/// Compares an analytic gradient against central differences, coordinate by
/// coordinate. rel err = |g - fd| / max(|fd|, rel_floor * max(1, |f(x)|)),
/// so a gradient that is off by a factor of two reports roughly 1.0 while
/// coordinates whose true gradient drowns in difference roundoff do not
/// produce spurious failures.
GradCheckResult check_gradients(const ScalarFn& f, const GradFn& grad,
                                const std::vector<double>& x,
                                const GradCheckConfig& cfg = {},
                                const BranchFn& branch = nullptr);

}  // namespace vmrtk
