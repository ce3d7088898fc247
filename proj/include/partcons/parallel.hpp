// Copyright 2026 The partcons Authors.
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

namespace partcons {

/// Caps worker threads used by modules that shard work. 0 = hardware default.
void set_max_threads(std::size_t n) noexcept;
std::size_t max_threads() noexcept;

/// Calls fn(i) for i in [0, count). Work items must write disjoint outputs;
/// results are independent of the thread count. The first exception thrown
/// by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace partcons
