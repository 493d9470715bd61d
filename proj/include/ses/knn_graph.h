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

#ifndef SES_KNN_GRAPH_H_
#define SES_KNN_GRAPH_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ses/dataset_io.h"

namespace ses {

struct Neighbor {
  SampleId node;
  double weight;
};

struct WeightedEdge {
  SampleId u;
  SampleId v;
  double weight;
};

// Undirected weighted graph in CSR form. Node i is sample i. Every stored
// weight lies in (0, 1]; there are no self-loops and adjacency lists are
// sorted by neighbor id.
class SampleGraph {
 public:
  SampleGraph() = default;

  // Each undirected edge must appear once (either orientation). Throws
  // InvalidArgument on self-loops, duplicates, ids >= n or weights outside
  // (0, 1].
  static SampleGraph FromEdges(std::size_t n, std::span<const WeightedEdge> edges);

  std::size_t num_nodes() const { return degree_.size(); }
  std::size_t num_edges() const { return adjacency_.size() / 2; }
  std::span<const Neighbor> neighbors(SampleId u) const {
    return {adjacency_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }
  // d(u): sum of incident weights.
  double degree(SampleId u) const { return degree_[u]; }
  const std::vector<double>& degrees() const { return degree_; }
  // vol(V): sum of all degrees.
  double total_volume() const { return total_volume_; }

  // Weight of edge (u, v), or 0 when absent.
  double EdgeWeight(SampleId u, SampleId v) const;

  // Each undirected edge once, with u < v, ordered by (u, v).
  std::vector<WeightedEdge> Edges() const;

  // Debug dump: header `u,v,w`, one edge per line with u < v.
  std::string ToCsv() const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<double> degree_;
  double total_volume_ = 0.0;
};

// (cos(a, b) + 1) / 2. Throws ZeroVector if either row has zero norm.
double NormalizedCosine(std::span<const double> a, std::span<const double> b);

// round(log2 n) clamped to [1, n - 1]. Requires n >= 2.
std::size_t DefaultK(std::size_t n);

// Exact k-nearest lists under NormalizedCosine, before symmetrization.
// lists[u] holds u's k most similar other samples, most similar first; ties
// go to the lower index. Throws InvalidK unless 1 <= k <= n - 1 and
// ZeroVector on a zero-norm row.
std::vector<std::vector<SampleId>> DirectedKnnLists(const EmbeddingMatrix& emb,
                                                    std::size_t k,
                                                    int num_threads = 1);

// Union-symmetrized kNN graph. Edges of weight exactly 0 are dropped.
SampleGraph BuildKnnGraph(const EmbeddingMatrix& emb, std::size_t k,
                          int num_threads = 1);

}  // namespace ses

#endif  // SES_KNN_GRAPH_H_
