// Copyright 2026 The pcsa Authors
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

namespace pcsa {

// Worker count used by parallel_for. Defaults to the PCSA_THREADS environment
// variable when set, else the machine's hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);
std::size_t default_thread_count();

// Splits [begin, end) into contiguous chunks, one per worker. Callers must only
// write to state owned by their chunk; results are then independent of the
// worker count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace pcsa
