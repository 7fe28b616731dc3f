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

#include <cstddef>
#include <functional>

namespace vmrtk {

/// Process-wide worker cap used by parallel_for; 1 (the default) runs
/// everything inline.
void set_max_threads(int n);
int max_threads();

/// Runs fn(0..n-1), possibly across threads. Callers must write results into
/// per-index slots and reduce in index order afterwards, so any thread count
/// produces identical output. The first exception thrown by fn is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace vmrtk
