// Copyright 2026-present the latesearch project
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

namespace latesearch {

/// Caps the number of worker threads used by the library. 0 means
/// std::thread::hardware_concurrency().
void
SetThreadCount(std::size_t n);

std::size_t
ThreadCount();

/// Runs fn(begin, end) over [0, n) split into fixed blocks of `block` items.
/// Block boundaries depend only on n and block, never on the thread count,
/// so per-item results are reproducible as long as fn writes to per-item
/// slots.
void
ParallelFor(std::size_t n,
            std::size_t block,
            const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace latesearch
