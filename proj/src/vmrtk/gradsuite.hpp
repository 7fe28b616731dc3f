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
#include <string>
#include <vector>

#include "vmrtk/gradcheck.hpp"

namespace vmrtk {

struct GradSuiteEntry {
  std::string name;
  GradCheckResult result;  // aggregated over all points of this loss
};

struct GradSuiteReport {
  double tolerance = 0.0;
  bool passed = false;
  std::vector<GradSuiteEntry> entries;
};

/// Finite-difference verification of every analytic gradient: the set
/// matching loss, the event loss in both association modes, the position
/// loss, and the combined total. Each loss is probed at `points_per_loss`
/// random parameter points; coordinates that sit on a piecewise boundary
/// (detected by branch probing) are skipped rather than compared.
GradSuiteReport run_gradcheck_suite(std::uint64_t seed,
                                    std::size_t points_per_loss,
                                    double tolerance);

}  // namespace vmrtk
