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

// Structural entropy of a graph under an encoding tree, and its exact
// per-node (Shapley) decomposition.
//
// With V = vol(graph), lca(u, v) the lowest common ancestor of two leaves
// and E the undirected edge set:
//
//   H(G, T) = -sum_{a != root} boundary(a)/V * log(vol(a) / vol(parent(a)))
//           = (2 * sum_E w_uv log vol(lca(u,v)) - sum_u d(u) log d(u)) / V
//
//   S_e(u)  = sum_{v ~ u} w_uv log vol(lca(u,v)) / V
//   phi(u)  = S_e(u) - d(u) log d(u) / V,          sum_u phi(u) = H(G, T)
//
// phi(u) is the Shapley value of u in the game whose coalition value is the
// entropy of the induced subgraph, with vol and degrees kept at their
// full-graph values.

#ifndef SES_ENTROPY_H_
#define SES_ENTROPY_H_

#include <vector>

#include "ses/encoding_tree.h"
#include "ses/knn_graph.h"

namespace ses {

enum class LogBase { kTwo, kE };

// Multiplier converting natural-log quantities to `base`.
double NatsTo(LogBase base);

// Sum over non-root tree nodes, with vol and boundary recomputed from the
// graph by walking tree paths (ignores the values stored in the tree).
double GraphEntropyDirect(const SampleGraph& graph, const EncodingTree& tree,
                          LogBase base = LogBase::kTwo);

// Edge form of the same quantity using LCA volumes.
double GraphEntropyFromEdges(const SampleGraph& graph, const EncodingTree& tree,
                             LogBase base = LogBase::kTwo);

// Node-level structural entropy S_e for every sample. O(|E|) LCA lookups;
// per-node sums are accumulated in neighbor order, so the result does not
// depend on the thread count.
std::vector<double> NodeStructuralEntropy(const SampleGraph& graph,
                                          const EncodingTree& tree,
                                          LogBase base = LogBase::kTwo,
                                          int num_threads = 1);

// Full Shapley value phi for every sample. Requires d(u) > 0.
std::vector<double> ShapleyClosedForm(const SampleGraph& graph,
                                      const EncodingTree& tree,
                                      LogBase base = LogBase::kTwo,
                                      int num_threads = 1);

// Reference Shapley value of sample u by enumerating every coalition of the
// other nodes (subset form with binomial weights). Uses naive ancestor walks
// for LCAs. Throws TooLarge when n > kMaxBruteForceNodes.
inline constexpr std::size_t kMaxBruteForceNodes = 12;
double ShapleyBruteForce(const SampleGraph& graph, const EncodingTree& tree,
                         SampleId u, LogBase base = LogBase::kTwo);

}  // namespace ses

#endif  // SES_ENTROPY_H_
