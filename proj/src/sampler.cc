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

#include "ses/sampler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ses/error.h"

namespace ses {
namespace {

// Candidate ids by descending score, ties by ascending id.
std::vector<SampleId> CandidateOrder(std::span<const double> scores,
                                     const CandidateMask& mask) {
  std::vector<SampleId> order;
  for (SampleId i = 0; i < scores.size(); ++i) {
    if (mask[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](SampleId a, SampleId b) {
    return scores[a] > scores[b];
  });
  return order;
}

void CheckInputs(std::span<const double> scores, const CandidateMask& mask,
                 const SampleGraph* graph) {
  if (scores.size() != mask.size() ||
      (graph != nullptr && graph->num_nodes() != scores.size())) {
    throw Error(ErrorCode::kLengthMismatch,
                "scores, mask and graph disagree on the sample count");
  }
}

class ThresholdPass {
 public:
  ThresholdPass(const SampleGraph& graph, std::vector<SampleId> order,
                const ClassCaps* caps)
      : graph_(graph), order_(std::move(order)), caps_(caps),
        selected_(graph.num_nodes(), 0) {
    if (caps_ != nullptr) counts_.assign(caps_->caps.size(), 0);
  }

  const std::vector<SampleId>& order() const { return order_; }

  std::vector<SampleId> Run(double theta) {
    std::vector<SampleId> accepted;
    std::fill(counts_.begin(), counts_.end(), 0);
    for (SampleId u : order_) {
      if (caps_ != nullptr) {
        const int c = caps_->labels[u];
        if (counts_[c] >= caps_->caps[c]) continue;
      }
      bool rejected = false;
      for (const auto& nb : graph_.neighbors(u)) {
        if (selected_[nb.node] && nb.weight > theta) {
          rejected = true;
          break;
        }
      }
      if (rejected) continue;
      selected_[u] = 1;
      accepted.push_back(u);
      if (caps_ != nullptr) ++counts_[caps_->labels[u]];
    }
    for (SampleId u : accepted) selected_[u] = 0;
    return accepted;
  }

 private:
  const SampleGraph& graph_;
  std::vector<SampleId> order_;
  const ClassCaps* caps_;
  std::vector<std::uint8_t> selected_;
  std::vector<std::size_t> counts_;
};

}  // namespace

ClassCaps MakeClassCaps(const LabelVector& labels, std::size_t budget,
                        double gamma) {
  ClassCaps caps;
  caps.labels = labels.labels;
  const double per_class = gamma * static_cast<double>(budget) /
                           static_cast<double>(labels.num_classes);
  // Guard against 1.0 * 10 / 2 landing a hair above an integer.
  const auto cap = static_cast<std::size_t>(std::ceil(per_class - 1e-9));
  caps.caps.assign(labels.num_classes, cap);
  return caps;
}

std::vector<SampleId> SampleWithThreshold(std::span<const double> scores,
                                          const CandidateMask& mask,
                                          const SampleGraph& graph,
                                          double theta, const ClassCaps* caps) {
  CheckInputs(scores, mask, &graph);
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  }
  ThresholdPass pass(graph, CandidateOrder(scores, mask), caps);
  return pass.Run(theta);
}

std::size_t ResolveBudget(const SelectionConfig& config, std::size_t n) {
  if (config.rate.has_value() == config.budget.has_value()) {
    throw Error(ErrorCode::kInvalidArgument,
                "exactly one of rate and budget must be set");
  }
  if (config.gamma && !(*config.gamma >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be >= 1");
  }
  if (config.max_iters < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 0");
  }
  std::size_t m = 0;
  if (config.rate) {
    const double rate = *config.rate;
    if (!(rate > 0.0 && rate <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "rate must lie in (0, 1]");
    }
    m = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  } else {
    m = *config.budget;
  }
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "budget must be >= 1");
  return m;
}

SelectionResult Select(std::span<const double> scores,
                       const CandidateMask& mask, const SampleGraph& graph,
                       const SelectionConfig& config,
                       const LabelVector* labels) {
  CheckInputs(scores, mask, &graph);
  const std::size_t n = scores.size();
  const std::size_t m = ResolveBudget(config, n);
  if (config.gamma && labels == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "gamma requires class labels");
  }
  if (labels != nullptr && labels->labels.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "labels do not cover every sample");
  }
  const std::size_t pool = CountCandidates(mask);
  if (m > pool) {
    throw Error(ErrorCode::kInfeasibleBudget,
                "budget " + std::to_string(m) + " exceeds the " +
                    std::to_string(pool) + " candidates left after cutoff");
  }

  std::optional<ClassCaps> caps;
  if (config.gamma) caps = MakeClassCaps(*labels, m, *config.gamma);
  ThresholdPass pass(graph, CandidateOrder(scores, mask),
                     caps ? &*caps : nullptr);

  SelectionResult result;
  std::vector<SampleId> best = pass.Run(1.0);
  result.theta_final = 1.0;
  if (best.size() < m) {
    // Only class caps can starve a theta = 1 pass.
    std::vector<std::uint8_t> taken(n, 0);
    for (SampleId u : best) taken[u] = 1;
    const std::size_t shortfall = m - best.size();
    for (SampleId u : pass.order()) {
      if (best.size() == m) break;
      if (!taken[u]) best.push_back(u);
    }
    result.warnings.push_back("class caps relaxed: " +
                              std::to_string(shortfall) +
                              " samples taken beyond their class cap");
  } else if (config.strategy == SamplingStrategy::kBlueNoise) {
    double lo = 0.0;
    double hi = 1.0;
    for (int iter = 0; iter < config.max_iters; ++iter) {
      const double mid = 0.5 * (lo + hi);
      std::vector<SampleId> accepted = pass.Run(mid);
      if (accepted.size() >= m) {
        hi = mid;
        result.theta_final = mid;
        best = std::move(accepted);
      } else {
        lo = mid;
      }
    }
  }
  best.resize(m);
  std::sort(best.begin(), best.end());
  result.indices = std::move(best);
  if (labels != nullptr) {
    result.per_class_counts.assign(labels->num_classes, 0);
    for (SampleId u : result.indices) ++result.per_class_counts[labels->labels[u]];
  }
  return result;
}

std::vector<SampleId> TopScoreSelect(std::span<const double> scores,
                                     const CandidateMask& mask, std::size_t m) {
  CheckInputs(scores, mask, nullptr);
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "budget must be >= 1");
  std::vector<SampleId> order = CandidateOrder(scores, mask);
  if (m > order.size()) {
    throw Error(ErrorCode::kInfeasibleBudget,
                "budget " + std::to_string(m) + " exceeds the " +
                    std::to_string(order.size()) + " candidates");
  }
  order.resize(m);
  std::sort(order.begin(), order.end());
  return order;
}

LabelVector KMeansClusters(const EmbeddingMatrix& emb, std::size_t num_clusters,
                           std::uint64_t seed) {
  const std::size_t n = emb.rows();
  const std::size_t d = emb.cols();
  if (num_clusters < 1 || num_clusters > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "cluster count must lie in [1, n]");
  }
  auto dist2 = [&](std::span<const double> a, const double* b) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = a[j] - b[j];
      s += diff * diff;
    }
    return s;
  };

  std::mt19937_64 rng(seed);
  std::vector<double> centers;
  centers.reserve(num_clusters * d);
  std::vector<std::uint8_t> chosen(n, 0);
  auto add_center = [&](std::size_t i) {
    chosen[i] = 1;
    const auto row = emb.row(i);
    centers.insert(centers.end(), row.begin(), row.end());
  };
  add_center(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < num_clusters; ++c) {
    const double* last = centers.data() + (c - 1) * d;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dist2(emb.row(i), last));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += nearest[i];
        if (nearest[i] > 0.0 && cumulative > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // r landed on the rounding slack at the end
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a center; fall back to unchosen points.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[std::uniform_int_distribution<std::size_t>(
          0, rest.size() - 1)(rng)];
    }
    add_center(pick);
  }

  std::vector<int> labels(n, 0);
  std::vector<double> sums(num_clusters * d);
  std::vector<std::size_t> counts(num_clusters);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < num_clusters; ++c) {
        const double dd = dist2(emb.row(i), centers.data() + c * d);
        if (dd < best) {
          best = dd;
          labels[i] = static_cast<int>(c);
        }
      }
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = emb.row(i);
      double* s = sums.data() + labels[i] * d;
      for (std::size_t j = 0; j < d; ++j) s[j] += row[j];
      ++counts[labels[i]];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < num_clusters; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      double shift = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double updated = sums[c * d + j] / static_cast<double>(counts[c]);
        const double diff = updated - centers[c * d + j];
        shift += diff * diff;
        centers[c * d + j] = updated;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    if (max_shift < 1e-6) break;
  }
  LabelVector out;
  out.labels = std::move(labels);
  out.num_classes = static_cast<int>(num_clusters);
  return out;
}

}  // namespace ses
