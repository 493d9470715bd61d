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

#include "ses/entropy.h"

#include <cmath>
#include <numbers>
#include <string>

#include "ses/error.h"
#include "ses/parallel.h"

namespace ses {
namespace {

void CheckCompatible(const SampleGraph& graph, const EncodingTree& tree) {
  if (tree.num_leaves() != graph.num_nodes()) {
    throw Error(ErrorCode::kTreeGraphMismatch,
                "tree has " + std::to_string(tree.num_leaves()) +
                    " leaves, graph has " +
                    std::to_string(graph.num_nodes()) + " nodes");
  }
  if (!(graph.total_volume() > 0.0)) {
    throw Error(ErrorCode::kTreeGraphMismatch, "graph has zero volume");
  }
  const double tol = 1e-9 * std::max(1.0, graph.total_volume());
  for (SampleId u = 0; u < graph.num_nodes(); ++u) {
    if (std::abs(tree.node(tree.leaf_of_sample(u)).vol - graph.degree(u)) >
        tol) {
      throw Error(ErrorCode::kTreeGraphMismatch,
                  "leaf volume differs from degree at sample " +
                      std::to_string(u));
    }
  }
}

double XLogX(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Volumes recomputed bottom-up from graph degrees. Parents have larger ids.
std::vector<double> VolumesFromGraph(const SampleGraph& graph,
                                     const EncodingTree& tree) {
  std::vector<double> vol(tree.num_nodes(), 0.0);
  for (SampleId u = 0; u < graph.num_nodes(); ++u) vol[u] = graph.degree(u);
  for (std::size_t id = 0; id + 1 < tree.num_nodes(); ++id) {
    vol[tree.node(static_cast<TreeNodeId>(id)).parent] += vol[id];
  }
  return vol;
}

TreeNodeId NaiveLca(const EncodingTree& tree,
                    const std::vector<std::size_t>& depth, TreeNodeId a,
                    TreeNodeId b) {
  while (depth[a] > depth[b]) a = tree.node(a).parent;
  while (depth[b] > depth[a]) b = tree.node(b).parent;
  while (a != b) {
    a = tree.node(a).parent;
    b = tree.node(b).parent;
  }
  return a;
}

}  // namespace

double NatsTo(LogBase base) {
  return base == LogBase::kTwo ? 1.0 / std::numbers::ln2 : 1.0;
}

double GraphEntropyDirect(const SampleGraph& graph, const EncodingTree& tree,
                          LogBase base) {
  CheckCompatible(graph, tree);
  const auto vol = VolumesFromGraph(graph, tree);
  const auto depth = tree.Depths();
  std::vector<double> boundary(tree.num_nodes(), 0.0);
  for (const auto& e : graph.Edges()) {
    const TreeNodeId lca = NaiveLca(tree, depth, tree.leaf_of_sample(e.u),
                                    tree.leaf_of_sample(e.v));
    for (TreeNodeId end : {tree.leaf_of_sample(e.u), tree.leaf_of_sample(e.v)}) {
      for (TreeNodeId a = end; a != lca; a = tree.node(a).parent) {
        boundary[a] += e.weight;
      }
    }
  }
  const double volume = graph.total_volume();
  double h = 0.0;
  for (std::size_t id = 0; id + 1 < tree.num_nodes(); ++id) {
    if (boundary[id] == 0.0) continue;
    const TreeNodeId parent = tree.node(static_cast<TreeNodeId>(id)).parent;
    h -= boundary[id] / volume * std::log(vol[id] / vol[parent]);
  }
  return h * NatsTo(base);
}

double GraphEntropyFromEdges(const SampleGraph& graph, const EncodingTree& tree,
                             LogBase base) {
  CheckCompatible(graph, tree);
  const LcaIndex lca(tree);
  double edge_sum = 0.0;
  for (SampleId u = 0; u < graph.num_nodes(); ++u) {
    for (const auto& nb : graph.neighbors(u)) {
      if (u < nb.node) edge_sum += nb.weight * std::log(lca.LcaVolume(u, nb.node));
    }
  }
  double degree_sum = 0.0;
  for (double d : graph.degrees()) degree_sum += XLogX(d);
  return (2.0 * edge_sum - degree_sum) / graph.total_volume() * NatsTo(base);
}

std::vector<double> NodeStructuralEntropy(const SampleGraph& graph,
                                          const EncodingTree& tree,
                                          LogBase base, int num_threads) {
  CheckCompatible(graph, tree);
  const LcaIndex lca(tree);
  const double scale = NatsTo(base) / graph.total_volume();
  std::vector<double> out(graph.num_nodes(), 0.0);
  ParallelFor(graph.num_nodes(), 1024, num_threads,
              [&](std::size_t begin, std::size_t end) {
                for (std::size_t u = begin; u < end; ++u) {
                  double sum = 0.0;
                  for (const auto& nb : graph.neighbors(static_cast<SampleId>(u))) {
                    sum += nb.weight *
                           std::log(lca.LcaVolume(static_cast<SampleId>(u), nb.node));
                  }
                  out[u] = sum * scale;
                }
              });
  return out;
}

std::vector<double> ShapleyClosedForm(const SampleGraph& graph,
                                      const EncodingTree& tree, LogBase base,
                                      int num_threads) {
  std::vector<double> phi =
      NodeStructuralEntropy(graph, tree, base, num_threads);
  const double scale = NatsTo(base) / graph.total_volume();
  for (SampleId u = 0; u < graph.num_nodes(); ++u) {
    phi[u] -= XLogX(graph.degree(u)) * scale;
  }
  return phi;
}

double ShapleyBruteForce(const SampleGraph& graph, const EncodingTree& tree,
                         SampleId u, LogBase base) {
  const std::size_t n = graph.num_nodes();
  if (n > kMaxBruteForceNodes) {
    throw Error(ErrorCode::kTooLarge,
                "brute-force Shapley supports at most " +
                    std::to_string(kMaxBruteForceNodes) + " nodes, got " +
                    std::to_string(n));
  }
  if (u >= n) throw Error(ErrorCode::kInvalidArgument, "sample out of range");
  CheckCompatible(graph, tree);

  const auto vol = VolumesFromGraph(graph, tree);
  const auto depth = tree.Depths();
  const auto edges = graph.Edges();
  std::vector<double> edge_term(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const TreeNodeId lca =
        NaiveLca(tree, depth, tree.leaf_of_sample(edges[e].u),
                 tree.leaf_of_sample(edges[e].v));
    edge_term[e] = edges[e].weight * std::log(vol[lca]);
  }

  // Coalition value: entropy of the induced subgraph with full-graph vol
  // and degrees, in nats, without the 1/V factor.
  auto value = [&](std::uint32_t mask) {
    double v = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if ((mask >> edges[e].u & 1u) && (mask >> edges[e].v & 1u)) {
        v += 2.0 * edge_term[e];
      }
    }
    for (SampleId x = 0; x < n; ++x) {
      if (mask >> x & 1u) v -= XLogX(graph.degree(x));
    }
    return v;
  };

  // weight(s) = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(double(n - s)) -
                         std::lgamma(n + 1.0));
  }
  const std::uint32_t self = 1u << u;
  double phi = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (mask & self) continue;
    const int s = std::popcount(mask);
    phi += weight[s] * (value(mask | self) - value(mask));
  }
  return phi / graph.total_volume() * NatsTo(base);
}

}  // namespace ses
