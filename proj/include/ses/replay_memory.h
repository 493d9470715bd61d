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

// Fixed-size replay memories for continual learning.
//
// Per-task mode splits the capacity equally over the tasks seen so far.
// Merge-reduce mode divides the capacity into equal slots; a new batch takes
// a free slot, and when none is free two slots that represent the same number
// of streamed samples are merged by re-selecting from their union.

#ifndef SES_REPLAY_MEMORY_H_
#define SES_REPLAY_MEMORY_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ses/dataset_io.h"
#include "ses/pipeline.h"

namespace ses {

enum class ReplayMode { kPerTask, kMergeReduce };

struct ReplayEntry {
  SampleId sample = 0;  // caller-assigned global id
  int task = 0;         // task id, or batch number in merge-reduce mode
  double score = 0.0;   // S(u) from the selection that admitted it
  std::vector<double> embedding;
  double difficulty = 1.0;
};

struct ReplaySlot {
  std::vector<ReplayEntry> members;
  std::size_t represented_count = 0;
};

// Incoming task or batch. `difficulty` empty means identity difficulty.
struct ReplayBatch {
  std::span<const SampleId> ids;
  const EmbeddingMatrix* embeddings = nullptr;
  std::span<const double> difficulty;
};

struct ReplaySelector {
  PipelineConfig pipeline;  // k is clamped to the batch size
  SamplingStrategy strategy = SamplingStrategy::kBlueNoise;
  std::uint64_t seed = 0;
};

class ReplayMemory {
 public:
  static constexpr std::size_t kDefaultSlotCount = 10;

  static ReplayMemory PerTask(std::size_t capacity);
  // Throws CapacityTooSmall when capacity < slot_count.
  static ReplayMemory MergeReduce(std::size_t capacity,
                                  std::size_t slot_count = kDefaultSlotCount);

  ReplayMode mode() const { return mode_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t slot_count() const { return slot_count_; }
  std::size_t slot_size() const { return capacity_ / slot_count_; }
  std::size_t streamed() const { return streamed_; }
  const std::vector<int>& tasks() const { return tasks_; }
  const std::vector<ReplaySlot>& slots() const { return slots_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // All stored entries; per-task mode lists them task by task.
  std::vector<ReplayEntry> Entries() const;
  std::size_t size() const;
  std::size_t CountForTask(int task) const;

  // Re-splits the capacity over t = (tasks seen) + 1, shrinks earlier tasks to
  // their quota by stored score, then SES-selects the new task's quota.
  // Throws CapacityTooSmall when capacity < t.
  void UpdatePerTask(int task_id, const ReplayBatch& batch,
                     const ReplaySelector& selector);

  void UpdateMergeReduce(const ReplayBatch& batch,
                         const ReplaySelector& selector);

  nlohmann::json Snapshot() const;

 private:
  ReplayMemory(ReplayMode mode, std::size_t capacity, std::size_t slot_count)
      : mode_(mode), capacity_(capacity), slot_count_(slot_count) {}

  void MergeOnePair(const ReplaySelector& selector);

  ReplayMode mode_;
  std::size_t capacity_;
  std::size_t slot_count_;
  std::size_t streamed_ = 0;
  std::vector<int> tasks_;  // arrival order; per-task mode
  // Per-task mode keeps one slot per task, aligned with tasks_.
  std::vector<ReplaySlot> slots_;
  std::vector<std::string> warnings_;
  int batches_ = 0;
  int difficulty_kind_ = -1;  // -1 unset, 0 identity, 1 supplied
};

// Quota of the i-th task (0-based, arrival order) when `capacity` is split
// over `tasks` tasks. Earlier tasks receive the remainder.
std::size_t TaskQuota(std::size_t capacity, std::size_t tasks, std::size_t i);

}  // namespace ses

#endif  // SES_REPLAY_MEMORY_H_
