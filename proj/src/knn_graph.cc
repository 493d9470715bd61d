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

#include "ses/knn_graph.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <utility>

#include "ses/error.h"
#include "ses/parallel.h"

namespace ses {
namespace {

// Candidate search runs in float on unit-normalized rows and keeps a few
// extra candidates per query; the survivors are re-ranked with the exact
// double similarity. A true neighbor can only be lost if more than
// kExtraCandidates float scores are misordered around it.
constexpr std::size_t kExtraCandidates = 8;

// Register block: kQueryBlock queries against kPanelWidth candidates.
constexpr std::size_t kQueryBlock = 4;
constexpr std::size_t kPanelWidth = 32;  // one bit per lane in a uint32 mask
constexpr std::size_t kQueryChunk = 128;
constexpr std::size_t kTileBytes = 256 * 1024;

struct Candidate {
  float score;
  SampleId id;
};

// Higher score first, then lower id. This is a total order, so the best
// candidates of a row do not depend on the order they were offered in.
bool Better(float score, SampleId id, const Candidate& than) {
  return score > than.score || (score == than.score && id < than.id);
}

// Fixed-capacity candidate lists for every row, best first. `floor[i]` is
// -inf until row i is full and then its worst score, so `s >= floor[i]`
// is a cheap necessary test for admission.
class CandidateTable {
 public:
  CandidateTable(std::size_t rows, std::size_t padded_rows,
                 std::size_t capacity)
      : capacity_(capacity),
        items_(rows * capacity),
        counts_(rows, 0),
        floor_(padded_rows, std::numeric_limits<float>::infinity()) {
    std::fill_n(floor_.begin(), rows, -std::numeric_limits<float>::infinity());
  }

  const float* floor() const { return floor_.data(); }

  void Offer(std::size_t row, float score, SampleId id) {
    Candidate* first = items_.data() + row * capacity_;
    std::size_t& count = counts_[row];
    if (count == capacity_) {
      if (!Better(score, id, first[count - 1])) return;
      --count;
    }
    std::size_t pos = count;
    while (pos > 0 && Better(score, id, first[pos - 1])) {
      first[pos] = first[pos - 1];
      --pos;
    }
    first[pos] = Candidate{score, id};
    ++count;
    if (count == capacity_) floor_[row] = first[count - 1].score;
  }

  std::span<const Candidate> row(std::size_t i) const {
    return {items_.data() + i * capacity_, counts_[i]};
  }

 private:
  std::size_t capacity_;
  std::vector<Candidate> items_;
  std::vector<std::size_t> counts_;
  std::vector<float> floor_;
};

[[gnu::target_clones("avx512f", "arch=haswell", "default")]]
void Microkernel(const float* queries, std::size_t d, const float* panel,
                 float* out) {
  float acc[kQueryBlock][kPanelWidth] = {};
  for (std::size_t c = 0; c < d; ++c) {
    const float* t = panel + c * kPanelWidth;
    for (std::size_t a = 0; a < kQueryBlock; ++a) {
      const float q = queries[a * d + c];
      for (std::size_t j = 0; j < kPanelWidth; ++j) acc[a][j] += q * t[j];
    }
  }
  for (std::size_t a = 0; a < kQueryBlock; ++a) {
    for (std::size_t j = 0; j < kPanelWidth; ++j) {
      out[a * kPanelWidth + j] = acc[a][j];
    }
  }
}

double SquaredNorm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

void CheckRows(const EmbeddingMatrix& emb) {
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    if (SquaredNorm(emb.row(i)) == 0.0) {
      throw Error(ErrorCode::kZeroVector,
                  "sample " + std::to_string(i) + " has a zero embedding");
    }
  }
}

// Float candidate lists of size min(k + kExtraCandidates, n - 1). Each
// unordered pair is scored once, by the chunk holding its smaller index, and
// offered to both rows. Chunks borrow a table from a small pool; the pool is
// merged at the end, which is order-independent because Better is total.
std::vector<std::vector<Candidate>> CandidateLists(const EmbeddingMatrix& emb,
                                                   std::size_t capacity,
                                                   int num_threads) {
  const std::size_t n = emb.rows();
  const std::size_t d = emb.cols();

  std::vector<float> unit(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = emb.row(i);
    const double inv = 1.0 / std::sqrt(SquaredNorm(row));
    for (std::size_t c = 0; c < d; ++c) {
      unit[i * d + c] = static_cast<float>(row[c] * inv);
    }
  }

  const std::size_t num_panels = (n + kPanelWidth - 1) / kPanelWidth;
  const std::size_t padded = num_panels * kPanelWidth;
  std::vector<float> panels(padded * d, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = i / kPanelWidth;
    const std::size_t jj = i % kPanelWidth;
    float* dst = panels.data() + p * kPanelWidth * d;
    for (std::size_t c = 0; c < d; ++c) dst[c * kPanelWidth + jj] = unit[i * d + c];
  }
  const std::size_t panels_per_tile =
      std::max<std::size_t>(1, kTileBytes / (kPanelWidth * d * sizeof(float)));

  std::mutex pool_mu;
  std::vector<std::unique_ptr<CandidateTable>> pool;
  std::vector<CandidateTable*> idle;
  auto borrow = [&]() -> CandidateTable* {
    std::lock_guard<std::mutex> lock(pool_mu);
    if (idle.empty()) {
      pool.push_back(std::make_unique<CandidateTable>(n, padded, capacity));
      return pool.back().get();
    }
    CandidateTable* t = idle.back();
    idle.pop_back();
    return t;
  };

  static_assert(kQueryChunk % kPanelWidth == 0);
  ParallelFor(n, kQueryChunk, num_threads, [&](std::size_t begin,
                                               std::size_t end) {
    CandidateTable* table = borrow();
    const float* floor = table->floor();
    std::vector<float> block(kQueryBlock * d);
    float scores[kQueryBlock * kPanelWidth];
    for (std::size_t p0 = begin / kPanelWidth; p0 < num_panels;
         p0 += panels_per_tile) {
      const std::size_t p1 = std::min(num_panels, p0 + panels_per_tile);
      for (std::size_t q0 = begin; q0 < end; q0 += kQueryBlock) {
        const std::size_t qn = std::min(kQueryBlock, end - q0);
        for (std::size_t a = 0; a < kQueryBlock; ++a) {
          const std::size_t src = q0 + std::min(a, qn - 1);
          std::copy_n(unit.data() + src * d, d, block.data() + a * d);
        }
        const std::size_t first_panel = std::max(p0, q0 / kPanelWidth);
        for (std::size_t p = first_panel; p < p1; ++p) {
          Microkernel(block.data(), d, panels.data() + p * kPanelWidth * d,
                      scores);
          const std::size_t base = p * kPanelWidth;
          const std::size_t width = std::min(kPanelWidth, n - base);
          for (std::size_t a = 0; a < qn; ++a) {
            const std::size_t i = q0 + a;
            const float* s = scores + a * kPanelWidth;
            const float* col_floor = floor + base;
            const float row_floor = floor[i];
            // Bit j set when score j may enter either list.
            std::uint32_t mask = 0;
            for (std::size_t j = 0; j < kPanelWidth; ++j) {
              const bool maybe = s[j] >= row_floor || s[j] >= col_floor[j];
              mask |= static_cast<std::uint32_t>(maybe) << j;
            }
            if (base <= i) mask &= ~0u << (i - base) << 1;  // only v > i
            if (width < kPanelWidth) mask &= (1u << width) - 1;
            while (mask != 0) {
              const std::size_t j = std::countr_zero(mask);
              mask &= mask - 1;
              const std::size_t v = base + j;
              table->Offer(i, s[j], static_cast<SampleId>(v));
              table->Offer(v, s[j], static_cast<SampleId>(i));
            }
          }
        }
      }
    }
    std::lock_guard<std::mutex> lock(pool_mu);
    idle.push_back(table);
  });

  std::vector<std::vector<Candidate>> result(n);
  ParallelFor(n, 1024, num_threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& out = result[i];
      for (const auto& table : pool) {
        const auto row = table->row(i);
        out.insert(out.end(), row.begin(), row.end());
      }
      std::sort(out.begin(), out.end(), [](const Candidate& x,
                                           const Candidate& y) {
        return Better(x.score, x.id, y);
      });
      if (out.size() > capacity) out.resize(capacity);
    }
  });
  return result;
}

}  // namespace

SampleGraph SampleGraph::FromEdges(std::size_t n,
                                   std::span<const WeightedEdge> edges) {
  std::vector<std::size_t> counts(n + 1, 0);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw Error(ErrorCode::kInvalidArgument, "edge endpoint out of range");
    }
    if (e.u == e.v) throw Error(ErrorCode::kInvalidArgument, "self-loop");
    if (!(e.weight > 0.0 && e.weight <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge weight must lie in (0, 1]");
    }
    ++counts[e.u + 1];
    ++counts[e.v + 1];
  }
  SampleGraph g;
  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + counts[i + 1];
  g.adjacency_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& e : edges) {
    g.adjacency_[fill[e.u]++] = Neighbor{e.v, e.weight};
    g.adjacency_[fill[e.v]++] = Neighbor{e.u, e.weight};
  }
  g.degree_.assign(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto first = g.adjacency_.begin() + g.offsets_[u];
    auto last = g.adjacency_.begin() + g.offsets_[u + 1];
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) {
      return a.node < b.node;
    });
    for (auto it = first; it != last; ++it) {
      if (it != first && (it - 1)->node == it->node) {
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate edge " + std::to_string(u) + "-" +
                        std::to_string(it->node));
      }
      g.degree_[u] += it->weight;
    }
  }
  for (double d : g.degree_) g.total_volume_ += d;
  return g;
}

double SampleGraph::EdgeWeight(SampleId u, SampleId v) const {
  const auto adj = neighbors(u);
  auto it = std::lower_bound(
      adj.begin(), adj.end(), v,
      [](const Neighbor& a, SampleId id) { return a.node < id; });
  return (it != adj.end() && it->node == v) ? it->weight : 0.0;
}

std::vector<WeightedEdge> SampleGraph::Edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (SampleId u = 0; u < num_nodes(); ++u) {
    for (const auto& nb : neighbors(u)) {
      if (u < nb.node) out.push_back({u, nb.node, nb.weight});
    }
  }
  return out;
}

std::string SampleGraph::ToCsv() const {
  std::string out = "u,v,w\n";
  char buf[64];
  for (const auto& e : Edges()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
    out += std::to_string(e.u) + ',' + std::to_string(e.v) + ',' + buf + '\n';
  }
  return out;
}

[[gnu::noinline]] double NormalizedCosine(std::span<const double> a,
                                          std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "feature rows differ in length");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kZeroVector, "cosine of a zero-norm vector");
  }
  const double cos = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return 0.5 * (cos + 1.0);
}

std::size_t DefaultK(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidK, "default k needs n >= 2");
  const auto k = static_cast<std::size_t>(
      std::llround(std::log2(static_cast<double>(n))));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

std::vector<std::vector<SampleId>> DirectedKnnLists(const EmbeddingMatrix& emb,
                                                    std::size_t k,
                                                    int num_threads) {
  const std::size_t n = emb.rows();
  if (k < 1 || k + 1 > n) {
    throw Error(ErrorCode::kInvalidK,
                "k = " + std::to_string(k) + " outside [1, " +
                    std::to_string(n - 1) + "]");
  }
  CheckRows(emb);
  const std::size_t capacity = std::min(k + kExtraCandidates, n - 1);
  const auto candidates = CandidateLists(emb, capacity, num_threads);

  std::vector<std::vector<SampleId>> lists(n);
  ParallelFor(n, 256, num_threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<double, SampleId>> exact;
    for (std::size_t u = begin; u < end; ++u) {
      exact.clear();
      for (const auto& c : candidates[u]) {
        exact.emplace_back(NormalizedCosine(emb.row(u), emb.row(c.id)), c.id);
      }
      std::sort(exact.begin(), exact.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      lists[u].reserve(k);
      for (std::size_t i = 0; i < k; ++i) lists[u].push_back(exact[i].second);
    }
  });
  return lists;
}

SampleGraph BuildKnnGraph(const EmbeddingMatrix& emb, std::size_t k,
                          int num_threads) {
  const auto lists = DirectedKnnLists(emb, k, num_threads);
  const std::size_t n = emb.rows();
  std::vector<std::pair<SampleId, SampleId>> pairs;
  pairs.reserve(n * k);
  for (SampleId u = 0; u < n; ++u) {
    for (SampleId v : lists[u]) pairs.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<WeightedEdge> edges(pairs.size());
  ParallelFor(pairs.size(), 4096, num_threads,
              [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) {
                  const auto [u, v] = pairs[i];
                  edges[i] = {u, v, NormalizedCosine(emb.row(u), emb.row(v))};
                }
              });
  std::erase_if(edges, [](const WeightedEdge& e) { return e.weight == 0.0; });
  return SampleGraph::FromEdges(n, edges);
}

}  // namespace ses
