// Copyright 2026 The STT Authors.
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

#ifndef STT_PARALLEL_H_
#define STT_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace stt {

// Worker cap: STT_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t WorkerCount();

// Calls fn(i) for every i in [0, n). Work is split into contiguous blocks,
// one per worker; fn must only write state owned by index i.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace stt

#endif  // STT_PARALLEL_H_
