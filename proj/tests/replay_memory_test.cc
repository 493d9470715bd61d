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

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>

#include "ses/coverage_bench.h"
#include "test_util.h"

namespace ses {
namespace {

using testing::ErrorOf;

struct Stream {
  std::vector<EmbeddingMatrix> batches;
  std::vector<std::vector<SampleId>> ids;
};

// `count` batches of `size` samples each, with consecutive global ids.
Stream MakeStream(std::size_t count, std::size_t size, std::uint64_t seed,
                  bool fresh_centers) {
  Stream s;
  const GaussianMixture mix = MixtureOf({2, 1, 6, seed, 2.0});
  SampleId next = 0;
  for (std::size_t b = 0; b < count; ++b) {
    EmbeddingMatrix emb =
        fresh_centers ? GenerateGmm({2, size / 2, 6, seed + 31 * b, 2.0}).first
                      : SampleMixture(mix, size / 2, seed + b + 1).first;
    std::vector<SampleId> ids(emb.rows());
    std::iota(ids.begin(), ids.end(), next);
    next += static_cast<SampleId>(ids.size());
    s.batches.push_back(std::move(emb));
    s.ids.push_back(std::move(ids));
  }
  return s;
}

ReplayBatch BatchOf(const Stream& s, std::size_t b) {
  return {s.ids[b], &s.batches[b], {}};
}

TEST(TaskQuotaTest, EqualSplit) {
  EXPECT_EQ(TaskQuota(100, 5, 0), 20u);
  EXPECT_EQ(TaskQuota(10, 3, 0), 4u);
  EXPECT_EQ(TaskQuota(10, 3, 1), 3u);
  EXPECT_EQ(TaskQuota(10, 3, 2), 3u);
}

TEST(PerTaskTest, SingleTaskOwnsMemory) {
  const Stream s = MakeStream(1, 20, 1, true);
  ReplayMemory mem = ReplayMemory::PerTask(4);
  mem.UpdatePerTask(0, BatchOf(s, 0), {});
  EXPECT_EQ(mem.size(), 4u);
  EXPECT_EQ(mem.CountForTask(0), 4u);
}

TEST(PerTaskTest, SecondTaskHalvesFirstByStoredScore) {
  const Stream s = MakeStream(2, 20, 2, true);
  ReplayMemory mem = ReplayMemory::PerTask(4);
  mem.UpdatePerTask(0, BatchOf(s, 0), {});
  std::vector<ReplayEntry> first = mem.Entries();
  std::stable_sort(first.begin(), first.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.sample < b.sample;
  });
  std::set<SampleId> expected = {first[0].sample, first[1].sample};

  mem.UpdatePerTask(1, BatchOf(s, 1), {});
  EXPECT_EQ(mem.CountForTask(0), 2u);
  EXPECT_EQ(mem.CountForTask(1), 2u);
  std::set<SampleId> kept;
  for (const auto& e : mem.Entries()) {
    if (e.task == 0) kept.insert(e.sample);
  }
  EXPECT_EQ(kept, expected);
}

TEST(PerTaskTest, FiveTasksOfHundred) {
  const Stream s = MakeStream(5, 100, 3, true);
  ReplayMemory mem = ReplayMemory::PerTask(100);
  std::set<SampleId> seen;
  for (int t = 0; t < 5; ++t) {
    mem.UpdatePerTask(t, BatchOf(s, t), {});
    seen.insert(s.ids[t].begin(), s.ids[t].end());
    std::size_t lo = 1000, hi = 0;
    for (int u = 0; u <= t; ++u) {
      lo = std::min(lo, mem.CountForTask(u));
      hi = std::max(hi, mem.CountForTask(u));
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_LE(mem.size(), 100u);
    for (const auto& e : mem.Entries()) EXPECT_TRUE(seen.count(e.sample));
  }
  for (int t = 0; t < 5; ++t) EXPECT_EQ(mem.CountForTask(t), 20u);
}

TEST(PerTaskTest, Errors) {
  const Stream s = MakeStream(3, 10, 4, true);
  ReplayMemory mem = ReplayMemory::PerTask(2);
  mem.UpdatePerTask(0, BatchOf(s, 0), {});
  EXPECT_EQ(ErrorOf([&] { mem.UpdatePerTask(0, BatchOf(s, 1), {}); }),
            "InvalidArgument");
  mem.UpdatePerTask(1, BatchOf(s, 1), {});
  EXPECT_EQ(ErrorOf([&] { mem.UpdatePerTask(2, BatchOf(s, 2), {}); }),
            "CapacityTooSmall");
  EXPECT_EQ(mem.size(), 2u);
  EXPECT_EQ(ErrorOf([&] { mem.UpdateMergeReduce(BatchOf(s, 2), {}); }),
            "InvalidArgument");
}

// Counts-only model of the slot policy: merge the earliest pair among the
// smallest equal counts, replace the first and drop the second.
std::vector<std::size_t> ModelStep(std::vector<std::size_t> counts,
                                   std::size_t slots, std::size_t batch) {
  if (counts.size() == slots) {
    std::size_t best_a = 0, best_b = 0, best = SIZE_MAX;
    for (std::size_t a = 0; a < counts.size(); ++a) {
      for (std::size_t b = a + 1; b < counts.size(); ++b) {
        if (counts[a] == counts[b] && counts[a] < best) {
          best = counts[a];
          best_a = a;
          best_b = b;
        }
      }
    }
    counts[best_a] += counts[best_b];
    counts.erase(counts.begin() + best_b);
  }
  counts.push_back(batch);
  return counts;
}

std::vector<std::size_t> Counts(const ReplayMemory& mem) {
  std::vector<std::size_t> out;
  for (const auto& slot : mem.slots()) out.push_back(slot.represented_count);
  return out;
}

TEST(MergeReduceTest, EleventhBatchMergesFirstTwoSlots) {
  const Stream s = MakeStream(11, 20, 5, false);
  ReplayMemory mem = ReplayMemory::MergeReduce(50);
  EXPECT_EQ(mem.slot_count(), 10u);
  EXPECT_EQ(mem.slot_size(), 5u);
  for (std::size_t b = 0; b < 10; ++b) mem.UpdateMergeReduce(BatchOf(s, b), {});
  EXPECT_EQ(mem.slots().size(), 10u);
  const auto first = mem.slots()[0].members;
  const auto second = mem.slots()[1].members;
  mem.UpdateMergeReduce(BatchOf(s, 10), {});
  ASSERT_EQ(mem.slots().size(), 10u);
  EXPECT_EQ(mem.slots()[0].represented_count, 40u);
  EXPECT_EQ(mem.slots()[0].members.size(), 5u);
  std::set<SampleId> pool;
  for (const auto& e : first) pool.insert(e.sample);
  for (const auto& e : second) pool.insert(e.sample);
  for (const auto& e : mem.slots()[0].members) EXPECT_TRUE(pool.count(e.sample));
  EXPECT_TRUE(mem.warnings().empty());
}

TEST(MergeReduceTest, FollowsBinaryCounterModel) {
  // Seven slots always hold an equal pair for up to 127 equal batches.
  for (std::size_t slots : {7u, 10u}) {
    const Stream s = MakeStream(64, 8, 6, false);
    ReplayMemory mem = ReplayMemory::MergeReduce(4 * slots, slots);
    std::vector<std::size_t> model;
    for (std::size_t b = 0; b < 64; ++b) {
      mem.UpdateMergeReduce(BatchOf(s, b), {});
      model = ModelStep(model, slots, 8);
      ASSERT_EQ(Counts(mem), model) << "slots " << slots << " batch " << b;
      for (std::size_t c : model) {
        EXPECT_EQ(c % 8, 0u);
        EXPECT_TRUE(std::has_single_bit(c / 8));
      }
    }
    EXPECT_TRUE(mem.warnings().empty());
  }
}

TEST(MergeReduceTest, InvariantsOverSixtyFourBatches) {
  const Stream s = MakeStream(64, 50, 7, false);
  ReplayMemory mem = ReplayMemory::MergeReduce(100);
  for (std::size_t b = 0; b < 64; ++b) {
    mem.UpdateMergeReduce(BatchOf(s, b), {});
    std::size_t represented = 0;
    for (const auto& slot : mem.slots()) {
      represented += slot.represented_count;
      EXPECT_GE(slot.represented_count, slot.members.size());
    }
    EXPECT_EQ(represented, 50 * (b + 1));
    EXPECT_EQ(mem.streamed(), 50 * (b + 1));
    EXPECT_LE(mem.size(), 100u);
  }
}

TEST(MergeReduceTest, UnequalBatchesMergeClosestCounts) {
  const GaussianMixture mix = MixtureOf({2, 1, 4, 8, 2.0});
  ReplayMemory mem = ReplayMemory::MergeReduce(6, 3);
  std::vector<EmbeddingMatrix> batches;
  std::vector<std::vector<SampleId>> ids;
  SampleId next = 0;
  for (std::size_t per_class : {5u, 8u, 20u, 9u}) {
    batches.push_back(SampleMixture(mix, per_class, next + 1).first);
    ids.emplace_back(batches.back().rows());
    std::iota(ids.back().begin(), ids.back().end(), next);
    next += static_cast<SampleId>(batches.back().rows());
  }
  for (std::size_t b = 0; b < 4; ++b) {
    mem.UpdateMergeReduce({ids[b], &batches[b], {}}, {});
  }
  // Counts 10, 16, 40: the closest pair is 10 and 16.
  EXPECT_EQ(Counts(mem), (std::vector<std::size_t>{26, 40, 18}));
  EXPECT_EQ(mem.warnings().size(), 1u);
}

TEST(MergeReduceTest, Errors) {
  EXPECT_EQ(ErrorOf([] { ReplayMemory::MergeReduce(9, 10); }), "CapacityTooSmall");
  EXPECT_EQ(ErrorOf([] { ReplayMemory::PerTask(0); }), "CapacityTooSmall");
  const Stream s = MakeStream(2, 10, 9, false);
  ReplayMemory one_slot = ReplayMemory::MergeReduce(5, 1);
  one_slot.UpdateMergeReduce(BatchOf(s, 0), {});
  EXPECT_EQ(ErrorOf([&] { one_slot.UpdateMergeReduce(BatchOf(s, 1), {}); }),
            "NoMergeablePair");
}

TEST(ReplaySnapshotTest, JsonParses) {
  const Stream s = MakeStream(12, 20, 10, false);
  ReplayMemory mem = ReplayMemory::MergeReduce(30);
  for (std::size_t b = 0; b < 12; ++b) mem.UpdateMergeReduce(BatchOf(s, b), {});
  const auto parsed = nlohmann::json::parse(mem.Snapshot().dump());
  EXPECT_EQ(parsed["mode"], "merge_reduce");
  EXPECT_EQ(parsed["slots"].size(), 10u);
  EXPECT_EQ(parsed["entries"].size(), mem.size());
  EXPECT_EQ(parsed["streamed"], 240);
  std::size_t represented = 0;
  for (const auto& slot : parsed["slots"]) {
    represented += slot["represented_count"].get<std::size_t>();
  }
  EXPECT_EQ(represented, 240u);
}

}  // namespace
}  // namespace ses
