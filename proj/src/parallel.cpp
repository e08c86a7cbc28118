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

#include "longhorizon/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <vector>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace longhorizon::parallel {
namespace {

int DefaultThreads() {
  if (const char* env = std::getenv("LONGHORIZON_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_override{0};

}  // namespace

int MaxThreads() {
  const int o = g_override.load(std::memory_order_relaxed);
  if (o > 0) return o;
  static const int kDefault = DefaultThreads();
  return kDefault;
}

void SetMaxThreads(int n) { g_override.store(n > 0 ? n : 0, std::memory_order_relaxed); }

void ForEach(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(MaxThreads())
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace longhorizon::parallel
