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

// Encoding trees: hierarchical community trees over the nodes of a
// SampleGraph. Leaves are single graph nodes; every internal node is the
// union of its children. Each node carries
//
//   vol(a)       total weighted degree of the graph nodes inside a,
//   boundary(a)  total weight of edges with exactly one endpoint inside a,
//
// which is all the structural entropy of the graph under the tree needs.
//
// Node ids are dense. Leaves are always nodes 0..n-1 (leaf i holds sample
// i); internal nodes follow, and the root has the largest id.

#ifndef SES_ENCODING_TREE_H_
#define SES_ENCODING_TREE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "ses/knn_graph.h"

namespace ses {

using TreeNodeId = std::int32_t;
inline constexpr TreeNodeId kNoParent = -1;

struct TreeNode {
  TreeNodeId parent = kNoParent;
  std::vector<TreeNodeId> children;  // ascending ids
  double vol = 0.0;
  double boundary = 0.0;
};

class EncodingTree {
 public:
  EncodingTree() = default;

  // Tree given by a parent array over nodes [0, parents.size()). Nodes
  // 0..n-1 must be the leaves for the n graph nodes; exactly one node has
  // parent kNoParent, and every parent id must exceed its children's ids
  // (so the root is last); otherwise throws InvalidArgument. vol and
  // boundary are computed from `graph`. Throws TreeGraphMismatch on any
  // other structural problem.
  static EncodingTree FromParents(const SampleGraph& graph,
                                  std::span<const TreeNodeId> parents);

  // Root with every graph node as a direct child.
  static EncodingTree Flat(const SampleGraph& graph);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_leaves() const { return num_leaves_; }
  TreeNodeId root() const { return static_cast<TreeNodeId>(nodes_.size()) - 1; }
  const TreeNode& node(TreeNodeId id) const { return nodes_[id]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool is_leaf(TreeNodeId id) const {
    return static_cast<std::size_t>(id) < num_leaves_;
  }
  TreeNodeId leaf_of_sample(SampleId u) const {
    return static_cast<TreeNodeId>(u);
  }

  // Max number of edges on a root-to-leaf path.
  std::size_t height() const;
  // Number of edges from the root to every node.
  std::vector<std::size_t> Depths() const;

  // Structural entropy in nats as tracked during construction. For trees
  // made by FromParents/Flat it is computed from the stored vol/boundary.
  double tracked_entropy() const { return tracked_entropy_; }

  // Checks every structural invariant against `graph`: leaf count, link
  // consistency, vol(leaf) = d(u), vol additivity, boundary(root) = 0 and
  // boundary <= vol. Throws TreeGraphMismatch on the first violation.
  void Validate(const SampleGraph& graph) const;

  // [{id, parent, vol, g, leaf_sample}], parent and leaf_sample null when
  // absent.
  nlohmann::json ToJson() const;

 private:
  friend class TreeAssembler;

  std::vector<TreeNode> nodes_;
  std::size_t num_leaves_ = 0;
  double tracked_entropy_ = 0.0;
};

enum class TreeMode { kBinary, kCompressed };

struct TreeBuildConfig {
  TreeMode mode = TreeMode::kCompressed;
  std::size_t max_height = 3;  // compressed mode only, >= 2
};

// Greedy agglomerative construction. All leaves start under the root; the
// pair of root children joined by at least one edge whose merge into a new
// common parent lowers the structural entropy the most is merged, until no
// merge lowers it. Ties go to the lexicographically smallest (min id, max
// id) pair. In compressed mode the result is then passed to CompressTree.
// Throws IsolatedNode if some node has zero degree.
EncodingTree BuildEncodingTree(const SampleGraph& graph,
                               const TreeBuildConfig& config = {});

// While the tree is taller than max_height, removes the internal non-root
// node lying on an over-long root-to-leaf path whose removal (children
// re-attached to its parent) raises the structural entropy the least; ties
// go to the lower node id. Internal nodes are renumbered densely in their
// original order.
EncodingTree CompressTree(const EncodingTree& tree, const SampleGraph& graph,
                          std::size_t max_height);

// Constant-time lowest-common-ancestor queries from an Euler tour and a
// sparse table over tour depths.
class LcaIndex {
 public:
  explicit LcaIndex(const EncodingTree& tree);

  TreeNodeId Lca(TreeNodeId a, TreeNodeId b) const;

  // vol of the LCA of two distinct samples' leaves. Throws SameNode if
  // u == v.
  double LcaVolume(SampleId u, SampleId v) const;

 private:
  const EncodingTree* tree_;
  std::vector<std::uint32_t> first_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::vector<TreeNodeId>> table_;
  std::vector<std::uint8_t> log2_;
};

}  // namespace ses

#endif  // SES_ENCODING_TREE_H_
