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

#include "ses/replay_memory.h"

#include <algorithm>
#include <limits>
#include <utility>

#include "ses/error.h"

namespace ses {
namespace {

struct Pick {
  std::size_t local = 0;
  double score = 0.0;
};

// SES selection of up to `target` rows. Fewer rows than the target are all
// kept.
std::vector<Pick> SelectRows(const EmbeddingMatrix& emb,
                             std::span<const double> difficulty,
                             std::size_t target,
                             const ReplaySelector& selector) {
  const std::size_t n = emb.rows();
  if (n == 1) return {Pick{0, 1.0}};
  PipelineConfig cfg = selector.pipeline;
  if (cfg.k >= n) cfg.k = n - 1;
  const ScoredDataset scored = ScoreDataset(emb, difficulty, cfg);
  SelectionConfig sel;
  sel.budget = std::min(target, CountCandidates(scored.mask));
  sel.seed = selector.seed;
  sel.strategy = selector.strategy;
  const SelectionResult result =
      Select(scored.score, scored.mask, scored.graph, sel, nullptr);
  std::vector<Pick> picks;
  picks.reserve(result.indices.size());
  for (SampleId i : result.indices) picks.push_back({i, scored.score[i]});
  return picks;
}

void CheckBatch(const ReplayBatch& batch) {
  if (batch.embeddings == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "batch has no embeddings");
  }
  if (batch.ids.size() != batch.embeddings->rows() ||
      (!batch.difficulty.empty() &&
       batch.difficulty.size() != batch.embeddings->rows())) {
    throw Error(ErrorCode::kLengthMismatch,
                "batch ids, embeddings and difficulty disagree on the count");
  }
}

std::vector<ReplayEntry> MakeEntries(const ReplayBatch& batch, int task,
                                     const std::vector<Pick>& picks) {
  std::vector<ReplayEntry> out;
  out.reserve(picks.size());
  for (const Pick& p : picks) {
    ReplayEntry e;
    e.sample = batch.ids[p.local];
    e.task = task;
    e.score = p.score;
    const auto row = batch.embeddings->row(p.local);
    e.embedding.assign(row.begin(), row.end());
    e.difficulty = batch.difficulty.empty() ? 1.0 : batch.difficulty[p.local];
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::size_t TaskQuota(std::size_t capacity, std::size_t tasks, std::size_t i) {
  return capacity / tasks + (i < capacity % tasks ? 1 : 0);
}

ReplayMemory ReplayMemory::PerTask(std::size_t capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::kCapacityTooSmall, "capacity must be >= 1");
  }
  return ReplayMemory(ReplayMode::kPerTask, capacity, 1);
}

ReplayMemory ReplayMemory::MergeReduce(std::size_t capacity,
                                       std::size_t slot_count) {
  if (slot_count == 0 || capacity < slot_count) {
    throw Error(ErrorCode::kCapacityTooSmall,
                "capacity " + std::to_string(capacity) + " cannot hold " +
                    std::to_string(slot_count) + " slots");
  }
  return ReplayMemory(ReplayMode::kMergeReduce, capacity, slot_count);
}

std::vector<ReplayEntry> ReplayMemory::Entries() const {
  std::vector<ReplayEntry> out;
  for (const auto& slot : slots_) {
    out.insert(out.end(), slot.members.begin(), slot.members.end());
  }
  return out;
}

std::size_t ReplayMemory::size() const {
  std::size_t total = 0;
  for (const auto& slot : slots_) total += slot.members.size();
  return total;
}

std::size_t ReplayMemory::CountForTask(int task) const {
  std::size_t count = 0;
  for (const auto& slot : slots_) {
    for (const auto& e : slot.members) count += e.task == task;
  }
  return count;
}

void ReplayMemory::UpdatePerTask(int task_id, const ReplayBatch& batch,
                                 const ReplaySelector& selector) {
  if (mode_ != ReplayMode::kPerTask) {
    throw Error(ErrorCode::kInvalidArgument, "memory is not in per-task mode");
  }
  CheckBatch(batch);
  if (std::find(tasks_.begin(), tasks_.end(), task_id) != tasks_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "task " + std::to_string(task_id) + " was already added");
  }
  const std::size_t t = tasks_.size() + 1;
  if (capacity_ < t) {
    throw Error(ErrorCode::kCapacityTooSmall,
                "capacity " + std::to_string(capacity_) + " cannot hold " +
                    std::to_string(t) + " tasks");
  }
  const std::size_t quota = TaskQuota(capacity_, t, t - 1);
  if (quota > batch.ids.size()) {
    throw Error(ErrorCode::kInfeasibleBudget,
                "task " + std::to_string(task_id) + " has " +
                    std::to_string(batch.ids.size()) +
                    " samples for a quota of " + std::to_string(quota));
  }
  // Select first so a failure leaves the memory untouched.
  std::vector<ReplayEntry> fresh = MakeEntries(
      batch, task_id,
      SelectRows(*batch.embeddings, batch.difficulty, quota, selector));
  if (fresh.size() < quota) {
    throw Error(ErrorCode::kInfeasibleBudget,
                "cutoff left fewer candidates than the task quota");
  }

  for (std::size_t i = 0; i + 1 < t; ++i) {
    auto& members = slots_[i].members;
    std::stable_sort(members.begin(), members.end(),
                     [](const ReplayEntry& a, const ReplayEntry& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.sample < b.sample;
                     });
    members.resize(std::min(members.size(), TaskQuota(capacity_, t, i)));
    std::sort(members.begin(), members.end(),
              [](const ReplayEntry& a, const ReplayEntry& b) {
                return a.sample < b.sample;
              });
  }
  ReplaySlot slot;
  slot.members = std::move(fresh);
  slot.represented_count = batch.ids.size();
  slots_.push_back(std::move(slot));
  tasks_.push_back(task_id);
  streamed_ += batch.ids.size();
}

void ReplayMemory::MergeOnePair(const ReplaySelector& selector) {
  if (slots_.size() < 2) {
    throw Error(ErrorCode::kNoMergeablePair, "fewer than two slots to merge");
  }
  // Smallest equal represented_count, earliest slots first. Without an equal
  // pair, take the pair with the closest counts.
  std::size_t best_a = 0;
  std::size_t best_b = 0;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  std::size_t best_sum = std::numeric_limits<std::size_t>::max();
  for (std::size_t a = 0; a < slots_.size(); ++a) {
    for (std::size_t b = a + 1; b < slots_.size(); ++b) {
      const std::size_t ca = slots_[a].represented_count;
      const std::size_t cb = slots_[b].represented_count;
      const std::size_t gap = ca > cb ? ca - cb : cb - ca;
      const std::size_t sum = ca + cb;
      if (gap < best_gap || (gap == best_gap && sum < best_sum)) {
        best_gap = gap;
        best_sum = sum;
        best_a = a;
        best_b = b;
      }
    }
  }
  if (best_gap != 0) {
    warnings_.push_back("no two slots share a represented count; merged counts " +
                        std::to_string(slots_[best_a].represented_count) +
                        " and " +
                        std::to_string(slots_[best_b].represented_count));
  }

  std::vector<ReplayEntry> pool = std::move(slots_[best_a].members);
  for (auto& e : slots_[best_b].members) pool.push_back(std::move(e));
  const std::size_t d = pool.front().embedding.size();
  std::vector<double> data;
  data.reserve(pool.size() * d);
  std::vector<double> difficulty;
  for (const auto& e : pool) {
    data.insert(data.end(), e.embedding.begin(), e.embedding.end());
    difficulty.push_back(e.difficulty);
  }
  if (difficulty_kind_ == 0) difficulty.clear();
  const EmbeddingMatrix emb(pool.size(), d, std::move(data));
  const std::vector<Pick> picks =
      SelectRows(emb, difficulty, slot_size(), selector);

  ReplaySlot merged;
  merged.represented_count = best_sum;
  for (const Pick& p : picks) {
    ReplayEntry e = pool[p.local];
    e.score = p.score;
    merged.members.push_back(std::move(e));
  }
  std::sort(merged.members.begin(), merged.members.end(),
            [](const ReplayEntry& a, const ReplayEntry& b) {
              return a.sample < b.sample;
            });
  slots_[best_a] = std::move(merged);
  slots_.erase(slots_.begin() + static_cast<std::ptrdiff_t>(best_b));
}

void ReplayMemory::UpdateMergeReduce(const ReplayBatch& batch,
                                     const ReplaySelector& selector) {
  if (mode_ != ReplayMode::kMergeReduce) {
    throw Error(ErrorCode::kInvalidArgument,
                "memory is not in merge-reduce mode");
  }
  CheckBatch(batch);
  if (batch.ids.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "empty batch");
  }
  const int kind = batch.difficulty.empty() ? 0 : 1;
  if (difficulty_kind_ != -1 && difficulty_kind_ != kind) {
    throw Error(ErrorCode::kInvalidArgument,
                "batches mix supplied and identity difficulty");
  }
  ReplaySlot slot;
  slot.members = MakeEntries(
      batch, batches_,
      SelectRows(*batch.embeddings, batch.difficulty, slot_size(), selector));
  slot.represented_count = batch.ids.size();
  difficulty_kind_ = kind;
  if (slots_.size() == slot_count_) MergeOnePair(selector);
  slots_.push_back(std::move(slot));
  streamed_ += batch.ids.size();
  ++batches_;
}

nlohmann::json ReplayMemory::Snapshot() const {
  nlohmann::json j;
  j["mode"] = mode_ == ReplayMode::kPerTask ? "per_task" : "merge_reduce";
  j["capacity"] = capacity_;
  j["streamed"] = streamed_;
  j["size"] = size();
  if (mode_ == ReplayMode::kMergeReduce) {
    j["slot_count"] = slot_count_;
    j["slot_size"] = slot_size();
  }
  nlohmann::json entries = nlohmann::json::array();
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& slot : slots_) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& e : slot.members) {
      entries.push_back({{"sample", e.sample}, {"task", e.task}, {"score", e.score}});
      members.push_back(e.sample);
    }
    slots.push_back(
        {{"members", members}, {"represented_count", slot.represented_count}});
  }
  j["entries"] = std::move(entries);
  j["slots"] = std::move(slots);
  j["warnings"] = warnings_;
  return j;
}

}  // namespace ses
