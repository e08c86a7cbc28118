/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LONGHORIZON_PARALLEL_HPP_
#define LONGHORIZON_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace longhorizon::parallel {

// Thread cap for every OpenMP region in the library. Defaults to the value of
// LONGHORIZON_THREADS when set (and positive), otherwise to the OpenMP default.
int MaxThreads();

// Overrides the cap for the rest of the process; n < 1 restores the default.
void SetMaxThreads(int n);

// Runs body(0) .. body(n - 1) across threads (dynamic schedule). The first
// exception thrown by any call, in index order, is rethrown after all calls
// finish. Results must be written to per-index slots by the caller.
void ForEach(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace longhorizon::parallel

#endif  // LONGHORIZON_PARALLEL_HPP_
