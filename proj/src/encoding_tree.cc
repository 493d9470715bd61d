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

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>

#include "ses/error.h"

namespace ses {

// Grants the builders write access to EncodingTree internals.
class TreeAssembler {
 public:
  static EncodingTree Make(std::vector<TreeNode> nodes, std::size_t num_leaves,
                           double tracked_entropy) {
    EncodingTree t;
    t.nodes_ = std::move(nodes);
    t.num_leaves_ = num_leaves;
    t.tracked_entropy_ = tracked_entropy;
    return t;
  }
};

namespace {

[[noreturn]] void Mismatch(const std::string& what) {
  throw Error(ErrorCode::kTreeGraphMismatch, what);
}

// -sum over non-root nodes of boundary/V * ln(vol/vol(parent)), from the
// stored node values.
double EntropyFromNodes(const std::vector<TreeNode>& nodes, double volume) {
  double h = 0.0;
  for (const auto& node : nodes) {
    if (node.parent == kNoParent || node.boundary == 0.0) continue;
    h -= node.boundary / volume *
         std::log(node.vol / nodes[node.parent].vol);
  }
  return h;
}

void CheckDegrees(const SampleGraph& graph) {
  for (SampleId u = 0; u < graph.num_nodes(); ++u) {
    if (graph.degree(u) <= 0.0) {
      throw Error(ErrorCode::kIsolatedNode,
                  "node " + std::to_string(u) + " has no incident edges");
    }
  }
}

struct MergeCandidate {
  double delta;  // entropy change in nats, < 0
  TreeNodeId a;  // tree ids when pushed, a < b
  TreeNodeId b;
  SampleId key_a;  // cluster keys of a and b
  SampleId key_b;
};

// Orders the priority queue so the top is the most negative delta, then the
// smallest (a, b).
struct WorseCandidate {
  bool operator()(const MergeCandidate& x, const MergeCandidate& y) const {
    if (x.delta != y.delta) return x.delta > y.delta;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

// Live communities are named by a stable key (one of their leaves) so heap
// entries survive merges. Between cut changes a pair's delta and tree ids
// can only grow, so a stale entry never sorts after its true position; it is
// re-evaluated when it reaches the top. A cut that grows gets a fresh entry.
EncodingTree GreedyMerge(const SampleGraph& graph) {
  const std::size_t n = graph.num_nodes();
  const double volume = graph.total_volume();
  const std::size_t capacity = 2 * n;

  std::vector<double> vol(capacity, 0.0);
  std::vector<double> boundary(capacity, 0.0);
  std::vector<std::size_t> size(capacity, 0);
  std::vector<bool> alive(capacity, false);
  std::vector<std::vector<TreeNodeId>> children(capacity);
  std::vector<TreeNodeId> parent(capacity, kNoParent);
  std::vector<TreeNodeId> node_of(n);
  std::vector<std::unordered_map<SampleId, double>> cuts(n);

  double entropy = 0.0;
  for (SampleId u = 0; u < n; ++u) {
    const double d = graph.degree(u);
    vol[u] = d;
    boundary[u] = d;
    size[u] = 1;
    alive[u] = true;
    node_of[u] = static_cast<TreeNodeId>(u);
    entropy -= d / volume * std::log(d / volume);
    const auto nbrs = graph.neighbors(u);
    cuts[u].reserve(nbrs.size());
    for (const auto& nb : nbrs) cuts[u].emplace(nb.node, nb.weight);
  }

  // Current candidate for merging the communities keyed `ka` and `kb`.
  auto evaluate = [&](SampleId ka, SampleId kb,
                      double cut) -> std::optional<MergeCandidate> {
    const TreeNodeId a = node_of[ka];
    const TreeNodeId b = node_of[kb];
    if (size[a] + size[b] == n) return std::nullopt;  // spans the graph
    const double ratio = (vol[a] + vol[b]) / volume;
    if (!(ratio < 1.0)) return std::nullopt;
    const double delta = 2.0 * cut * std::log(ratio) / volume;
    if (!(delta < 0.0)) return std::nullopt;
    if (a < b) return MergeCandidate{delta, a, b, ka, kb};
    return MergeCandidate{delta, b, a, kb, ka};
  };

  std::priority_queue<MergeCandidate, std::vector<MergeCandidate>,
                      WorseCandidate>
      heap;
  for (SampleId u = 0; u < n; ++u) {
    for (const auto& nb : graph.neighbors(u)) {
      if (u >= nb.node) continue;
      if (auto c = evaluate(u, nb.node, nb.weight)) heap.push(*c);
    }
  }

  TreeNodeId next_id = static_cast<TreeNodeId>(n);
  std::vector<SampleId> absorbed;
  while (!heap.empty()) {
    const MergeCandidate top = heap.top();
    heap.pop();
    const TreeNodeId a = node_of[top.key_a];
    const TreeNodeId b = node_of[top.key_b];
    if (!alive[a] || !alive[b]) continue;
    auto cut_it = cuts[top.key_a].find(top.key_b);
    const auto current = evaluate(top.key_a, top.key_b, cut_it->second);
    if (!current) continue;
    if (current->delta != top.delta || current->a != top.a ||
        current->b != top.b) {
      heap.push(*current);
      continue;
    }

    const double cut = cut_it->second;
    const TreeNodeId p = next_id++;
    alive[a] = alive[b] = false;
    alive[p] = true;
    parent[a] = parent[b] = p;
    children[p] = {a, b};
    vol[p] = vol[a] + vol[b];
    size[p] = size[a] + size[b];
    boundary[p] = std::max(0.0, boundary[a] + boundary[b] - 2.0 * cut);
    entropy += top.delta;

    // Fold the smaller neighbor map into the larger one.
    SampleId keep = top.key_a;
    SampleId gone = top.key_b;
    if (cuts[keep].size() < cuts[gone].size()) std::swap(keep, gone);
    node_of[keep] = p;
    auto& into = cuts[keep];
    into.erase(gone);
    absorbed.clear();
    for (const auto& [y, w] : cuts[gone]) {
      if (y != keep) absorbed.push_back(y);
    }
    std::sort(absorbed.begin(), absorbed.end());  // map order is unspecified
    for (SampleId y : absorbed) {
      const double w = cuts[gone].at(y);
      double& merged = into[y];
      merged += w;
      auto& back = cuts[y];
      back.erase(gone);
      back[keep] = merged;
      if (auto c = evaluate(keep, y, merged)) heap.push(*c);
    }
    std::unordered_map<SampleId, double>().swap(cuts[gone]);
  }

  const TreeNodeId root = next_id;
  const std::size_t total = static_cast<std::size_t>(root) + 1;
  std::vector<TreeNode> nodes(total);
  for (TreeNodeId id = 0; id < root; ++id) {
    nodes[id].children = std::move(children[id]);
    nodes[id].vol = vol[id];
    nodes[id].boundary = boundary[id];
    nodes[id].parent = alive[id] ? root : parent[id];
    if (alive[id]) nodes[root].children.push_back(id);
  }
  for (TreeNodeId c : nodes[root].children) nodes[root].vol += nodes[c].vol;
  return TreeAssembler::Make(std::move(nodes), n, entropy);
}

}  // namespace

EncodingTree EncodingTree::FromParents(const SampleGraph& graph,
                                       std::span<const TreeNodeId> parents) {
  const std::size_t n = graph.num_nodes();
  const std::size_t total = parents.size();
  if (total < n + 1) Mismatch("tree has fewer nodes than graph nodes + root");
  if (parents.back() != kNoParent) {
    throw Error(ErrorCode::kInvalidArgument, "the root must be the last node");
  }
  std::vector<TreeNode> nodes(total);
  for (std::size_t id = 0; id + 1 < total; ++id) {
    const TreeNodeId p = parents[id];
    if (p < 0 || static_cast<std::size_t>(p) >= total) {
      Mismatch("node " + std::to_string(id) + " has an invalid parent");
    }
    if (static_cast<std::size_t>(p) <= id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "parents must have larger ids than their children");
    }
    nodes[id].parent = p;
    nodes[p].children.push_back(static_cast<TreeNodeId>(id));
  }
  for (std::size_t id = 0; id < total; ++id) {
    const bool leaf = id < n;
    if (leaf != nodes[id].children.empty()) {
      Mismatch("nodes 0..n-1 must be exactly the leaves");
    }
  }
  std::vector<std::size_t> depth(total, 0);
  std::vector<TreeNodeId> order{static_cast<TreeNodeId>(total - 1)};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (TreeNodeId c : nodes[order[i]].children) {
      depth[c] = depth[order[i]] + 1;
      order.push_back(c);
    }
  }
  if (order.size() != total) Mismatch("tree is not connected to its root");

  for (SampleId u = 0; u < n; ++u) nodes[u].vol = graph.degree(u);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (nodes[*it].parent != kNoParent) {
      nodes[nodes[*it].parent].vol += nodes[*it].vol;
    }
  }
  // boundary = vol - 2 * (weight of edges whose LCA lies in the subtree).
  std::vector<double> inside(total, 0.0);
  for (const auto& e : graph.Edges()) {
    TreeNodeId a = static_cast<TreeNodeId>(e.u);
    TreeNodeId b = static_cast<TreeNodeId>(e.v);
    while (depth[a] > depth[b]) a = nodes[a].parent;
    while (depth[b] > depth[a]) b = nodes[b].parent;
    while (a != b) {
      a = nodes[a].parent;
      b = nodes[b].parent;
    }
    inside[a] += e.weight;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (nodes[*it].parent != kNoParent) inside[nodes[*it].parent] += inside[*it];
  }
  for (std::size_t id = 0; id < total; ++id) {
    nodes[id].boundary = std::max(0.0, nodes[id].vol - 2.0 * inside[id]);
  }
  nodes[total - 1].boundary = 0.0;
  const double h = EntropyFromNodes(nodes, graph.total_volume());
  return TreeAssembler::Make(std::move(nodes), n, h);
}

EncodingTree EncodingTree::Flat(const SampleGraph& graph) {
  const TreeNodeId root = static_cast<TreeNodeId>(graph.num_nodes());
  std::vector<TreeNodeId> parents(graph.num_nodes() + 1, root);
  parents.back() = kNoParent;
  return FromParents(graph, parents);
}

std::vector<std::size_t> EncodingTree::Depths() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  // Parents always have larger ids than their children.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    for (TreeNodeId c : nodes_[i].children) depth[c] = depth[i] + 1;
  }
  return depth;
}

std::size_t EncodingTree::height() const {
  const auto depth = Depths();
  std::size_t h = 0;
  for (std::size_t u = 0; u < num_leaves_; ++u) h = std::max(h, depth[u]);
  return h;
}

void EncodingTree::Validate(const SampleGraph& graph) const {
  const std::size_t n = graph.num_nodes();
  if (num_leaves_ != n) {
    Mismatch("tree has " + std::to_string(num_leaves_) + " leaves, graph has " +
             std::to_string(n) + " nodes");
  }
  if (nodes_.empty() || nodes_.back().parent != kNoParent) {
    Mismatch("missing root");
  }
  const double tol = 1e-9 * std::max(1.0, graph.total_volume());
  std::size_t reached = 0;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const TreeNode& node = nodes_[id];
    const bool leaf = id < n;
    if (leaf != node.children.empty()) Mismatch("leaf set is not 0..n-1");
    if (id + 1 < nodes_.size()) {
      if (node.parent <= static_cast<TreeNodeId>(id) ||
          static_cast<std::size_t>(node.parent) >= nodes_.size()) {
        Mismatch("node " + std::to_string(id) + " has an invalid parent");
      }
      const auto& siblings = nodes_[node.parent].children;
      if (std::find(siblings.begin(), siblings.end(),
                    static_cast<TreeNodeId>(id)) == siblings.end()) {
        Mismatch("parent/child links disagree at node " + std::to_string(id));
      }
    }
    double child_vol = 0.0;
    for (TreeNodeId c : node.children) {
      if (nodes_[c].parent != static_cast<TreeNodeId>(id)) {
        Mismatch("child " + std::to_string(c) + " does not point back");
      }
      child_vol += nodes_[c].vol;
      ++reached;
    }
    const double expected = leaf ? graph.degree(static_cast<SampleId>(id))
                                 : child_vol;
    if (std::abs(node.vol - expected) > tol) {
      Mismatch("vol mismatch at node " + std::to_string(id));
    }
    if (node.boundary < 0.0 || node.boundary > node.vol + tol) {
      Mismatch("boundary outside [0, vol] at node " + std::to_string(id));
    }
    if (leaf && std::abs(node.boundary - node.vol) > tol) {
      Mismatch("leaf boundary differs from degree at " + std::to_string(id));
    }
  }
  // Parent ids strictly increase towards the root, so links are acyclic.
  if (reached + 1 != nodes_.size()) Mismatch("unreachable nodes");
  if (nodes_.back().boundary != 0.0) Mismatch("root boundary must be 0");
}

nlohmann::json EncodingTree::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const TreeNode& node = nodes_[id];
    nlohmann::json j;
    j["id"] = id;
    j["parent"] = node.parent == kNoParent ? nlohmann::json()
                                           : nlohmann::json(node.parent);
    j["vol"] = node.vol;
    j["g"] = node.boundary;
    j["leaf_sample"] = id < num_leaves_ ? nlohmann::json(id) : nlohmann::json();
    out.push_back(std::move(j));
  }
  return out;
}

EncodingTree CompressTree(const EncodingTree& tree, const SampleGraph& graph,
                          std::size_t max_height) {
  if (max_height < 2) {
    throw Error(ErrorCode::kInvalidArgument, "max_height must be >= 2");
  }
  if (tree.num_leaves() != graph.num_nodes()) {
    Mismatch("tree and graph sizes differ");
  }
  const std::size_t total = tree.num_nodes();
  const TreeNodeId root = tree.root();
  const double volume = graph.total_volume();

  std::vector<TreeNodeId> parent(total);
  std::vector<std::vector<TreeNodeId>> children(total);
  std::vector<std::size_t> slot(total, 0);  // position in parent's children
  std::vector<double> child_boundary(total, 0.0);
  for (std::size_t id = 0; id < total; ++id) {
    const TreeNode& node = tree.node(static_cast<TreeNodeId>(id));
    parent[id] = node.parent;
    children[id] = node.children;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      slot[node.children[i]] = i;
      child_boundary[id] += tree.node(node.children[i]).boundary;
    }
  }
  // Splicing a node out lifts its whole subtree by one level. Descendant
  // sets of surviving nodes never change, so subtrees stay contiguous in the
  // original preorder and the lifts go into a Fenwick tree over it.
  const std::vector<std::size_t> depth0 = tree.Depths();
  std::vector<std::size_t> tin(total), tout(total);
  {
    std::size_t clock = 0;
    std::vector<std::pair<TreeNodeId, bool>> dfs{{root, false}};
    while (!dfs.empty()) {
      const auto [x, done] = dfs.back();
      dfs.pop_back();
      if (done) {
        tout[x] = clock;
        continue;
      }
      tin[x] = clock++;
      dfs.emplace_back(x, true);
      for (TreeNodeId c : children[x]) dfs.emplace_back(c, false);
    }
  }
  std::vector<std::int64_t> lifts(total + 1, 0);
  auto add_lift = [&](std::size_t pos, std::int64_t v) {
    for (++pos; pos <= total; pos += pos & (~pos + 1)) lifts[pos] += v;
  };
  auto depth = [&](TreeNodeId id) {
    std::int64_t lifted = 0;
    for (std::size_t pos = tin[id] + 1; pos > 0; pos -= pos & (~pos + 1)) {
      lifted += lifts[pos];
    }
    return depth0[id] - static_cast<std::size_t>(lifted);
  };
  std::vector<std::size_t> sub_height(total, 0);
  for (std::size_t id = 0; id < total; ++id) {
    for (TreeNodeId c : children[id]) {
      sub_height[id] = std::max(sub_height[id], sub_height[c] + 1);
    }
  }
  if (sub_height[root] <= max_height) return tree;

  auto vol = [&](TreeNodeId id) { return tree.node(id).vol; };
  auto boundary = [&](TreeNodeId id) { return tree.node(id).boundary; };
  // Entropy increase from splicing `id` out of the tree.
  auto removal_cost = [&](TreeNodeId id) {
    return (child_boundary[id] - boundary(id)) *
           std::log(vol(parent[id]) / vol(id)) / volume;
  };
  auto candidate = [&](TreeNodeId id) {
    return id != root && !tree.is_leaf(id) &&
           depth(id) + sub_height[id] > max_height;
  };

  struct Entry {
    double cost;
    TreeNodeId id;
    std::uint32_t version;
  };
  auto worse = [](const Entry& x, const Entry& y) {
    return x.cost != y.cost ? x.cost > y.cost : x.id > y.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  std::vector<std::uint32_t> version(total, 0);
  std::vector<bool> alive(total, true);
  for (std::size_t id = 0; id < total; ++id) {
    const auto tid = static_cast<TreeNodeId>(id);
    if (candidate(tid)) heap.push({removal_cost(tid), tid, 0});
  }

  double entropy = tree.tracked_entropy();
  while (sub_height[root] > max_height && !heap.empty()) {
    const Entry top = heap.top();
    heap.pop();
    const TreeNodeId id = top.id;
    if (!alive[id] || top.version != version[id]) continue;
    // Depths and subtree heights only shrink, so a node that stops being a
    // candidate never becomes one again.
    if (!candidate(id)) continue;

    const TreeNodeId p = parent[id];
    entropy += top.cost;
    alive[id] = false;

    auto& siblings = children[p];
    const std::size_t pos = slot[id];
    siblings[pos] = siblings.back();
    slot[siblings[pos]] = pos;
    siblings.pop_back();
    for (TreeNodeId c : children[id]) {
      parent[c] = p;
      slot[c] = siblings.size();
      siblings.push_back(c);
    }
    child_boundary[p] += child_boundary[id] - boundary(id);

    add_lift(tin[id], 1);
    add_lift(tout[id], -1);

    for (TreeNodeId a = p; a != kNoParent; a = parent[a]) {
      std::size_t h = 0;
      for (TreeNodeId c : children[a]) h = std::max(h, sub_height[c] + 1);
      if (h == sub_height[a]) break;
      sub_height[a] = h;
    }

    if (candidate(p)) heap.push({removal_cost(p), p, ++version[p]});
    for (TreeNodeId c : children[id]) {
      if (candidate(c)) heap.push({removal_cost(c), c, ++version[c]});
    }
    children[id].clear();
  }

  // Renumber the surviving internal nodes in their original order.
  const std::size_t n = tree.num_leaves();
  std::vector<TreeNodeId> new_id(total, kNoParent);
  TreeNodeId next = 0;
  for (std::size_t id = 0; id < total; ++id) {
    if (alive[id]) new_id[id] = next++;
  }
  std::vector<TreeNode> nodes(static_cast<std::size_t>(next));
  for (std::size_t id = 0; id < total; ++id) {
    if (!alive[id]) continue;
    TreeNode& out = nodes[new_id[id]];
    out.parent = parent[id] == kNoParent ? kNoParent : new_id[parent[id]];
    out.vol = vol(static_cast<TreeNodeId>(id));
    out.boundary = boundary(static_cast<TreeNodeId>(id));
    for (TreeNodeId c : children[id]) out.children.push_back(new_id[c]);
    std::sort(out.children.begin(), out.children.end());
  }
  return TreeAssembler::Make(std::move(nodes), n, entropy);
}

LcaIndex::LcaIndex(const EncodingTree& tree) : tree_(&tree) {
  const std::size_t total = tree.num_nodes();
  first_.assign(total, 0);
  depth_.assign(total, 0);
  std::vector<TreeNodeId> tour;
  tour.reserve(2 * total);

  // Iterative DFS: (node, index of next child to visit).
  std::vector<std::pair<TreeNodeId, std::size_t>> stack{{tree.root(), 0}};
  first_[tree.root()] = 0;
  tour.push_back(tree.root());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = tree.node(node).children;
    if (next < kids.size()) {
      const TreeNodeId c = kids[next++];
      depth_[c] = depth_[node] + 1;
      first_[c] = static_cast<std::uint32_t>(tour.size());
      tour.push_back(c);
      stack.emplace_back(c, 0);
    } else {
      stack.pop_back();
      if (!stack.empty()) tour.push_back(stack.back().first);
    }
  }

  const std::size_t len = tour.size();
  log2_.assign(len + 1, 0);
  for (std::size_t i = 2; i <= len; ++i) log2_[i] = log2_[i / 2] + 1;
  table_.clear();
  table_.push_back(std::move(tour));
  for (std::size_t level = 1; (std::size_t{1} << level) <= len; ++level) {
    const auto& prev = table_[level - 1];
    const std::size_t half = std::size_t{1} << (level - 1);
    std::vector<TreeNodeId> row(len - (std::size_t{1} << level) + 1);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const TreeNodeId x = prev[i];
      const TreeNodeId y = prev[i + half];
      row[i] = depth_[x] <= depth_[y] ? x : y;
    }
    table_.push_back(std::move(row));
  }
}

TreeNodeId LcaIndex::Lca(TreeNodeId a, TreeNodeId b) const {
  std::size_t lo = first_[a];
  std::size_t hi = first_[b];
  if (lo > hi) std::swap(lo, hi);
  const std::size_t level = log2_[hi - lo + 1];
  const TreeNodeId x = table_[level][lo];
  const TreeNodeId y = table_[level][hi - (std::size_t{1} << level) + 1];
  return depth_[x] <= depth_[y] ? x : y;
}

double LcaIndex::LcaVolume(SampleId u, SampleId v) const {
  if (u == v) {
    throw Error(ErrorCode::kSameNode,
                "LCA volume needs two distinct samples, got " +
                    std::to_string(u) + " twice");
  }
  if (u >= tree_->num_leaves() || v >= tree_->num_leaves()) {
    throw Error(ErrorCode::kInvalidArgument, "sample id out of range");
  }
  return tree_->node(Lca(tree_->leaf_of_sample(u), tree_->leaf_of_sample(v)))
      .vol;
}

EncodingTree BuildEncodingTree(const SampleGraph& graph,
                               const TreeBuildConfig& config) {
  if (graph.num_nodes() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "graph has no nodes");
  }
  CheckDegrees(graph);
  EncodingTree binary = GreedyMerge(graph);
  if (config.mode == TreeMode::kBinary) return binary;
  return CompressTree(binary, graph, config.max_height);
}

}  // namespace ses
