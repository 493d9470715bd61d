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

#include "ses/encoding_tree.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ses/entropy.h"
#include "test_util.h"

namespace ses {
namespace {

using testing::ErrorOf;
using testing::RandomConnectedGraph;

SampleGraph TwoNodeGraph() {
  const std::vector<WeightedEdge> edges = {{0, 1, 1.0}};
  return SampleGraph::FromEdges(2, edges);
}

// Nodes 0-2 and 3-5 form unit triangles, joined by 2-3 with weight 0.1.
SampleGraph TwoTriangles() {
  const std::vector<WeightedEdge> edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0},
                                           {3, 4, 1.0}, {3, 5, 1.0}, {4, 5, 1.0},
                                           {2, 3, 0.1}};
  return SampleGraph::FromEdges(6, edges);
}

std::set<SampleId> LeavesUnder(const EncodingTree& t, TreeNodeId id) {
  if (t.is_leaf(id)) return {static_cast<SampleId>(id)};
  std::set<SampleId> out;
  for (TreeNodeId c : t.node(id).children) {
    const auto sub = LeavesUnder(t, c);
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

std::vector<std::set<SampleId>> Communities(const EncodingTree& t) {
  std::vector<std::set<SampleId>> out;
  for (TreeNodeId id = static_cast<TreeNodeId>(t.num_leaves());
       id < t.root(); ++id) {
    out.push_back(LeavesUnder(t, id));
  }
  return out;
}

TreeNodeId NaiveLca(const EncodingTree& t, TreeNodeId a, TreeNodeId b) {
  std::set<TreeNodeId> ancestors;
  for (TreeNodeId x = a; x != kNoParent; x = t.node(x).parent) ancestors.insert(x);
  for (TreeNodeId x = b; x != kNoParent; x = t.node(x).parent) {
    if (ancestors.count(x)) return x;
  }
  return kNoParent;
}

// Every set partition of {0..n-1}, as block labels.
void Partitions(std::size_t n, std::vector<TreeNodeId>& labels,
                TreeNodeId blocks,
                std::vector<std::pair<std::vector<TreeNodeId>, TreeNodeId>>& out) {
  if (labels.size() == n) {
    out.push_back({labels, blocks});
    return;
  }
  for (TreeNodeId b = 0; b <= blocks; ++b) {
    labels.push_back(b);
    Partitions(n, labels, std::max<TreeNodeId>(blocks, b + 1), out);
    labels.pop_back();
  }
}

// Two-level tree with one community per block (singleton blocks hang from
// the root directly).
EncodingTree PartitionTree(const SampleGraph& g,
                           const std::vector<TreeNodeId>& labels,
                           TreeNodeId blocks) {
  const auto n = static_cast<TreeNodeId>(labels.size());
  std::vector<int> sizes(blocks, 0);
  for (TreeNodeId b : labels) ++sizes[b];
  std::vector<TreeNodeId> community(blocks, kNoParent);
  TreeNodeId next = n;
  for (TreeNodeId b = 0; b < blocks; ++b) {
    if (sizes[b] > 1) community[b] = next++;
  }
  const TreeNodeId root = next;
  std::vector<TreeNodeId> parents(root + 1, root);
  parents[root] = kNoParent;
  for (TreeNodeId u = 0; u < n; ++u) {
    if (community[labels[u]] != kNoParent) parents[u] = community[labels[u]];
  }
  return EncodingTree::FromParents(g, parents);
}

TEST(BuildEncodingTreeTest, TwoNodeGraph) {
  const SampleGraph g = TwoNodeGraph();
  for (TreeMode mode : {TreeMode::kBinary, TreeMode::kCompressed}) {
    const EncodingTree t = BuildEncodingTree(g, {mode, 3});
    ASSERT_EQ(t.num_nodes(), 3u);
    EXPECT_EQ(t.node(0).parent, 2);
    EXPECT_EQ(t.node(1).parent, 2);
    EXPECT_NEAR(GraphEntropyFromEdges(g, t), 1.0, 1e-12);
    EXPECT_NEAR(t.tracked_entropy() / std::log(2.0), 1.0, 1e-12);
  }
}

TEST(BuildEncodingTreeTest, SeparatesTwoTriangles) {
  const SampleGraph g = TwoTriangles();
  const std::set<SampleId> left = {0, 1, 2};
  const std::set<SampleId> right = {3, 4, 5};
  for (TreeMode mode : {TreeMode::kBinary, TreeMode::kCompressed}) {
    const EncodingTree t = BuildEncodingTree(g, {mode, 2});
    t.Validate(g);
    const auto comms = Communities(t);
    EXPECT_NE(std::find(comms.begin(), comms.end(), left), comms.end());
    EXPECT_NE(std::find(comms.begin(), comms.end(), right), comms.end());
    for (const auto& c : comms) {
      const bool mixes = std::any_of(c.begin(), c.end(), [&](SampleId u) {
                           return left.count(u);
                         }) &&
                         std::any_of(c.begin(), c.end(), [&](SampleId u) {
                           return right.count(u);
                         });
      EXPECT_FALSE(mixes);
    }
  }
}

TEST(BuildEncodingTreeTest, TwoTrianglesAttainBestTwoLevelPartition) {
  const SampleGraph g = TwoTriangles();
  std::vector<std::pair<std::vector<TreeNodeId>, TreeNodeId>> all;
  std::vector<TreeNodeId> labels;
  Partitions(6, labels, 0, all);
  ASSERT_EQ(all.size(), 203u);  // Bell(6)
  double best = INFINITY;
  std::vector<TreeNodeId> best_labels;
  for (const auto& [lab, blocks] : all) {
    const double h = GraphEntropyDirect(g, PartitionTree(g, lab, blocks));
    if (h < best - 1e-12) {
      best = h;
      best_labels = lab;
    }
  }
  EXPECT_EQ(best_labels, (std::vector<TreeNodeId>{0, 0, 0, 1, 1, 1}));
  const EncodingTree greedy = BuildEncodingTree(g, {TreeMode::kCompressed, 2});
  EXPECT_EQ(greedy.height(), 2u);
  EXPECT_NEAR(GraphEntropyDirect(g, greedy), best, 1e-12);
}

TEST(BuildEncodingTreeTest, DisconnectedComponentsStaySeparate) {
  const std::vector<WeightedEdge> edges = {
      {0, 1, 0.9}, {1, 2, 0.8}, {0, 2, 0.7}, {3, 4, 0.6}, {4, 5, 0.5}};
  const SampleGraph g = SampleGraph::FromEdges(6, edges);
  for (TreeMode mode : {TreeMode::kBinary, TreeMode::kCompressed}) {
    const EncodingTree t = BuildEncodingTree(g, {mode, 3});
    t.Validate(g);
    EXPECT_GE(t.node(t.root()).children.size(), 2u);
    for (TreeNodeId c : t.node(t.root()).children) {
      const auto leaves = LeavesUnder(t, c);
      const bool a = std::any_of(leaves.begin(), leaves.end(),
                                 [](SampleId u) { return u < 3; });
      const bool b = std::any_of(leaves.begin(), leaves.end(),
                                 [](SampleId u) { return u >= 3; });
      EXPECT_FALSE(a && b);
    }
  }
}

TEST(BuildEncodingTreeTest, Errors) {
  const std::vector<WeightedEdge> edges = {{0, 1, 1.0}};
  const SampleGraph isolated = SampleGraph::FromEdges(3, edges);
  EXPECT_EQ(ErrorOf([&] { BuildEncodingTree(isolated); }), "IsolatedNode");
  const SampleGraph empty = SampleGraph::FromEdges(0, {});
  EXPECT_EQ(ErrorOf([&] { BuildEncodingTree(empty); }), "EmptyDataset");
}

TEST(BuildEncodingTreeTest, InvariantsOnRandomGraphs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    const SampleGraph g = RandomConnectedGraph(n, 0.15, rng);
    for (TreeMode mode : {TreeMode::kBinary, TreeMode::kCompressed}) {
      const EncodingTree t = BuildEncodingTree(g, {mode, 3});
      t.Validate(g);
      EXPECT_EQ(t.num_leaves(), n);
      EXPECT_EQ(t.node(t.root()).boundary, 0.0);
      EXPECT_NEAR(t.node(t.root()).vol, g.total_volume(), 1e-9);
      for (TreeNodeId id = static_cast<TreeNodeId>(n); id < t.root(); ++id) {
        double sum = 0.0;
        for (TreeNodeId c : t.node(id).children) sum += t.node(c).vol;
        EXPECT_NEAR(sum, t.node(id).vol, 1e-9);
        if (mode == TreeMode::kBinary) EXPECT_EQ(t.node(id).children.size(), 2u);
      }
      if (mode == TreeMode::kCompressed) EXPECT_LE(t.height(), 3u);
      const double direct = GraphEntropyDirect(g, t, LogBase::kE);
      EXPECT_NEAR(t.tracked_entropy(), direct, 1e-9 * std::max(1.0, direct));
    }
  }
}

TEST(BuildEncodingTreeTest, MergesLowerEntropyThanFlat) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const SampleGraph g = RandomConnectedGraph(30, 0.1, rng);
    const double flat = GraphEntropyDirect(g, EncodingTree::Flat(g));
    EXPECT_LE(GraphEntropyDirect(g, BuildEncodingTree(g, {TreeMode::kBinary, 3})),
              flat + 1e-12);
  }
}

// Quadratic greedy merge: every round rescans all live pairs. Returns the
// parent of every non-root node in the builder's numbering.
std::vector<TreeNodeId> NaiveGreedyParents(const SampleGraph& g) {
  const std::size_t n = g.num_nodes();
  const double volume = g.total_volume();
  std::vector<std::vector<double>> cut(2 * n, std::vector<double>(2 * n, 0.0));
  for (const auto& e : g.Edges()) cut[e.u][e.v] = cut[e.v][e.u] = e.weight;
  std::vector<double> vol(2 * n, 0.0);
  std::vector<std::size_t> size(2 * n, 0);
  std::vector<TreeNodeId> parent(2 * n, kNoParent);
  std::vector<TreeNodeId> live;
  for (SampleId u = 0; u < n; ++u) {
    vol[u] = g.degree(u);
    size[u] = 1;
    live.push_back(static_cast<TreeNodeId>(u));
  }
  TreeNodeId next = static_cast<TreeNodeId>(n);
  while (true) {
    double best = 0.0;
    TreeNodeId ba = kNoParent, bb = kNoParent;
    for (TreeNodeId a : live) {
      for (TreeNodeId b : live) {
        if (a >= b || cut[a][b] == 0.0 || size[a] + size[b] == n) continue;
        const double ratio = (vol[a] + vol[b]) / volume;
        if (!(ratio < 1.0)) continue;
        const double delta = 2.0 * cut[a][b] * std::log(ratio) / volume;
        if (delta < best) {  // scan order already favors the smaller pair
          best = delta;
          ba = a;
          bb = b;
        }
      }
    }
    if (ba == kNoParent) break;
    const TreeNodeId p = next++;
    parent[ba] = parent[bb] = p;
    vol[p] = vol[ba] + vol[bb];
    size[p] = size[ba] + size[bb];
    std::erase(live, ba);
    std::erase(live, bb);
    for (TreeNodeId x : live) cut[p][x] = cut[x][p] = cut[ba][x] + cut[bb][x];
    live.push_back(p);
    std::sort(live.begin(), live.end());
  }
  for (TreeNodeId x : live) parent[x] = next;
  parent.resize(static_cast<std::size_t>(next));
  return parent;
}

TEST(BuildEncodingTreeTest, MatchesQuadraticGreedyReference) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const SampleGraph g = RandomConnectedGraph(5 + rng() % 50, 0.08, rng);
    const EncodingTree t = BuildEncodingTree(g, {TreeMode::kBinary, 3});
    const auto expected = NaiveGreedyParents(g);
    ASSERT_EQ(t.num_nodes(), expected.size() + 1);
    for (std::size_t id = 0; id < expected.size(); ++id) {
      EXPECT_EQ(t.node(static_cast<TreeNodeId>(id)).parent, expected[id])
          << "trial " << trial << " node " << id;
    }
  }
}

// Compression by brute force: each round recomputes depths and heights and
// removes the cheapest internal node on a root-to-leaf path longer than
// `max_height` (ties: lower id). Returns the removed node ids.
std::set<TreeNodeId> NaiveCompressRemovals(const EncodingTree& tree,
                                           double volume,
                                           std::size_t max_height) {
  const std::size_t total = tree.num_nodes();
  std::vector<TreeNodeId> parent(total);
  std::vector<double> child_boundary(total, 0.0);
  for (std::size_t id = 0; id < total; ++id) {
    parent[id] = tree.node(static_cast<TreeNodeId>(id)).parent;
  }
  std::set<TreeNodeId> removed;
  const TreeNodeId root = tree.root();
  while (true) {
    std::vector<std::size_t> depth(total, 0), height(total, 0);
    std::fill(child_boundary.begin(), child_boundary.end(), 0.0);
    for (std::size_t id = total - 1; id-- > 0;) {
      if (!removed.count(static_cast<TreeNodeId>(id))) {
        depth[id] = depth[parent[id]] + 1;
        child_boundary[parent[id]] +=
            tree.node(static_cast<TreeNodeId>(id)).boundary;
      }
    }
    for (std::size_t id = 0; id + 1 < total; ++id) {
      if (!removed.count(static_cast<TreeNodeId>(id))) {
        height[parent[id]] = std::max(height[parent[id]], height[id] + 1);
      }
    }
    if (height[root] <= max_height) return removed;
    double best = std::numeric_limits<double>::infinity();
    TreeNodeId pick = kNoParent;
    for (std::size_t id = tree.num_leaves(); id + 1 < total; ++id) {
      const auto tid = static_cast<TreeNodeId>(id);
      if (removed.count(tid) || depth[id] + height[id] <= max_height) continue;
      const TreeNode& node = tree.node(tid);
      const double cost = (child_boundary[id] - node.boundary) *
                          std::log(tree.node(parent[id]).vol / node.vol) /
                          volume;
      if (cost < best) {
        best = cost;
        pick = tid;
      }
    }
    removed.insert(pick);
    for (std::size_t id = 0; id + 1 < total; ++id) {
      if (parent[id] == pick) parent[id] = parent[pick];
    }
  }
}

TEST(CompressTreeTest, MatchesBruteForceReference) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const SampleGraph g = RandomConnectedGraph(10 + rng() % 60, 0.06, rng);
    const EncodingTree binary = BuildEncodingTree(g, {TreeMode::kBinary, 3});
    const std::size_t max_height = 2 + trial % 3;
    const EncodingTree t = CompressTree(binary, g, max_height);
    const auto removed =
        NaiveCompressRemovals(binary, g.total_volume(), max_height);
    ASSERT_EQ(t.num_nodes(), binary.num_nodes() - removed.size())
        << "trial " << trial;
    // Survivors keep their relative order, so leaf sets identify them.
    std::set<std::vector<SampleId>> expected, actual;
    auto leaf_sets = [](const EncodingTree& tree, auto keep,
                        std::set<std::vector<SampleId>>& out) {
      std::vector<std::vector<SampleId>> leaves(tree.num_nodes());
      for (std::size_t id = 0; id < tree.num_nodes(); ++id) {
        if (id < tree.num_leaves()) leaves[id].push_back(id);
        for (TreeNodeId c : tree.node(static_cast<TreeNodeId>(id)).children) {
          leaves[id].insert(leaves[id].end(), leaves[c].begin(), leaves[c].end());
        }
        std::sort(leaves[id].begin(), leaves[id].end());
        if (keep(static_cast<TreeNodeId>(id))) out.insert(leaves[id]);
      }
    };
    leaf_sets(binary, [&](TreeNodeId id) { return !removed.count(id); }, expected);
    leaf_sets(t, [](TreeNodeId) { return true; }, actual);
    EXPECT_EQ(actual, expected) << "trial " << trial;
  }
}

TEST(CompressTreeTest, ShortTreeUnchanged) {
  const SampleGraph g = TwoTriangles();
  const EncodingTree t = BuildEncodingTree(g, {TreeMode::kCompressed, 2});
  ASSERT_LE(t.height(), 3u);
  EXPECT_EQ(CompressTree(t, g, 3).ToJson(), t.ToJson());
  EXPECT_EQ(ErrorOf([&] { CompressTree(t, g, 1); }), "InvalidArgument");
}

TEST(CompressTreeTest, PerfectBinaryTreeToHeightTwo) {
  std::mt19937_64 rng(9);
  const SampleGraph g = RandomConnectedGraph(8, 0.4, rng);
  // Leaves 0..7, pairs 8..11, quads 12..13, root 14.
  const std::vector<TreeNodeId> parents = {8,  8,  9,  9,  10, 10, 11, 11,
                                           12, 12, 13, 13, 14, 14, kNoParent};
  const EncodingTree perfect = EncodingTree::FromParents(g, parents);
  ASSERT_EQ(perfect.height(), 3u);
  const EncodingTree t = CompressTree(perfect, g, 2);
  t.Validate(g);
  EXPECT_LE(t.height(), 2u);
  const double recomputed = GraphEntropyDirect(g, t, LogBase::kE);
  EXPECT_NEAR(t.tracked_entropy(), recomputed, 1e-12);
  EXPECT_GE(recomputed, GraphEntropyDirect(g, perfect, LogBase::kE) - 1e-12);
}

TEST(CompressTreeTest, FlatRequestOnRandomTrees) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const SampleGraph g = RandomConnectedGraph(40, 0.1, rng);
    const EncodingTree binary = BuildEncodingTree(g, {TreeMode::kBinary, 3});
    const EncodingTree t = CompressTree(binary, g, 2);
    t.Validate(g);
    EXPECT_LE(t.height(), 2u);
    const double direct = GraphEntropyDirect(g, t, LogBase::kE);
    EXPECT_NEAR(t.tracked_entropy(), direct, 1e-9 * std::max(1.0, direct));
  }
}

TEST(FromParentsTest, ValidatesStructure) {
  const SampleGraph g = TwoNodeGraph();
  const std::vector<TreeNodeId> ok = {2, 2, kNoParent};
  EXPECT_EQ(EncodingTree::FromParents(g, ok).height(), 1u);
  const std::vector<TreeNodeId> two_roots = {2, kNoParent, kNoParent};
  EXPECT_NE(ErrorOf([&] { EncodingTree::FromParents(g, two_roots); }),
            "no error");
  const std::vector<TreeNodeId> backwards = {3, 3, kNoParent, 2};
  EXPECT_EQ(ErrorOf([&] { EncodingTree::FromParents(g, backwards); }),
            "InvalidArgument");
  const std::vector<TreeNodeId> leaf_parent = {1, 2, kNoParent};
  EXPECT_NE(ErrorOf([&] { EncodingTree::FromParents(g, leaf_parent); }),
            "no error");
}

TEST(EncodingTreeTest, JsonDump) {
  const SampleGraph g = TwoNodeGraph();
  const auto j = EncodingTree::Flat(g).ToJson();
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["parent"], 2);
  EXPECT_EQ(j[0]["leaf_sample"], 0);
  EXPECT_TRUE(j[2]["parent"].is_null());
  EXPECT_TRUE(j[2]["leaf_sample"].is_null());
  EXPECT_DOUBLE_EQ(j[2]["vol"].get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(j[0]["g"].get<double>(), 1.0);
}

TEST(LcaIndexTest, TwoNodeTree) {
  const SampleGraph g = TwoNodeGraph();
  const LcaIndex lca(EncodingTree::Flat(g));
  EXPECT_DOUBLE_EQ(lca.LcaVolume(0, 1), g.total_volume());
  EXPECT_EQ(ErrorOf([&] { lca.LcaVolume(1, 1); }), "SameNode");
}

TEST(LcaIndexTest, SameCommunity) {
  const SampleGraph g = TwoTriangles();
  const std::vector<TreeNodeId> parents = {6, 6, 6, 7, 7, 7, 8, 8, kNoParent};
  const EncodingTree t = EncodingTree::FromParents(g, parents);
  const LcaIndex lca(t);
  EXPECT_DOUBLE_EQ(lca.LcaVolume(0, 2), t.node(6).vol);
  EXPECT_DOUBLE_EQ(lca.LcaVolume(4, 5), t.node(7).vol);
  EXPECT_DOUBLE_EQ(lca.LcaVolume(2, 3), g.total_volume());
}

TEST(LcaIndexTest, MatchesNaiveWalk) {
  std::mt19937_64 rng(12);
  const SampleGraph g = RandomConnectedGraph(200, 0.03, rng);
  for (TreeMode mode : {TreeMode::kBinary, TreeMode::kCompressed}) {
    const EncodingTree t = BuildEncodingTree(g, {mode, 3});
    const LcaIndex lca(t);
    std::uniform_int_distribution<TreeNodeId> pick(0, t.root());
    for (int q = 0; q < 1000; ++q) {
      const TreeNodeId a = pick(rng);
      const TreeNodeId b = pick(rng);
      ASSERT_EQ(lca.Lca(a, b), NaiveLca(t, a, b));
    }
  }
}

}  // namespace
}  // namespace ses
