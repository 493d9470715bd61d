/*
 * Copyright 2026 The SES Authors.
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

#ifndef SES_PARALLEL_H_
#define SES_PARALLEL_H_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ses {

// Splits [0, count) into contiguous chunks of `grain` items and runs
// `body(begin, end)` on up to `num_threads` workers. Each chunk writes only
// to its own output slots, so results never depend on the thread count.
// The first exception thrown by any chunk is rethrown on the caller.
template <typename Body>
void ParallelFor(std::size_t count, std::size_t grain, int num_threads,
                 Body&& body) {
  if (count == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = (count + grain - 1) / grain;
  const std::size_t workers = std::min<std::size_t>(
      chunks, static_cast<std::size_t>(std::max(num_threads, 1)));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      body(c * grain, std::min(count, (c + 1) * grain));
    }
    return;
  }

  std::mutex mu;
  std::size_t next_chunk = 0;
  std::exception_ptr error;
  auto worker = [&]() {
    while (true) {
      std::size_t chunk;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_chunk >= chunks || error) return;
        chunk = next_chunk++;
      }
      try {
        body(chunk * grain, std::min(count, (chunk + 1) * grain));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Number of hardware threads, at least 1.
inline int DefaultThreadCount() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ses

#endif  // SES_PARALLEL_H_
