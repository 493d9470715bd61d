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

// Importance-biased blue-noise sampling.
//
// Candidates are visited from the highest score down (ties: lower index
// first). A candidate is accepted unless an already accepted graph neighbor
// is more similar to it than theta, or its class is already at its cap.
// Select() bisects theta so that exactly the requested number of samples
// comes out.

#ifndef SES_SAMPLER_H_
#define SES_SAMPLER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ses/dataset_io.h"
#include "ses/knn_graph.h"
#include "ses/scoring.h"

namespace ses {

// Per-class acceptance limits. labels[i] is the class of sample i.
struct ClassCaps {
  std::span<const int> labels;
  std::vector<std::size_t> caps;  // indexed by class
};

// ceil(gamma * m / C) for each of the C classes.
ClassCaps MakeClassCaps(const LabelVector& labels, std::size_t budget,
                        double gamma);

// One greedy pass. Returns accepted samples in acceptance order (descending
// score). `caps` may be null.
std::vector<SampleId> SampleWithThreshold(std::span<const double> scores,
                                          const CandidateMask& mask,
                                          const SampleGraph& graph,
                                          double theta,
                                          const ClassCaps* caps = nullptr);

enum class SamplingStrategy { kBlueNoise, kTopScore };

struct SelectionConfig {
  // Exactly one of rate / budget. The budget for a rate is round(rate * n).
  std::optional<double> rate;
  std::optional<std::size_t> budget;
  // Class imbalance factor; requires labels. Unset disables caps.
  std::optional<double> gamma;
  int max_iters = 40;
  std::uint64_t seed = 0;
  SamplingStrategy strategy = SamplingStrategy::kBlueNoise;
};

struct SelectionResult {
  std::vector<SampleId> indices;  // sorted, unique, size m
  double theta_final = 1.0;
  std::vector<std::size_t> per_class_counts;  // empty without labels
  std::vector<std::string> warnings;
};

// Validates the config and returns m. Throws InvalidArgument for a bad
// rate/budget/gamma combination.
std::size_t ResolveBudget(const SelectionConfig& config, std::size_t n);

// Blue-noise selection of exactly m samples (or top-score selection under
// kTopScore). theta is bisected on [0, 1] for max_iters rounds, keeping the
// smallest theta whose pass accepts at least m samples; that pass is cut to
// its m highest-scoring samples. When class caps make even theta = 1 fall
// short, the shortfall is filled with the best remaining candidates
// regardless of class and a warning is recorded. Throws InfeasibleBudget
// when m exceeds the candidate pool.
SelectionResult Select(std::span<const double> scores,
                       const CandidateMask& mask, const SampleGraph& graph,
                       const SelectionConfig& config,
                       const LabelVector* labels = nullptr);

// The m highest-scoring candidates, sorted by index. Throws
// InfeasibleBudget when m exceeds the pool.
std::vector<SampleId> TopScoreSelect(std::span<const double> scores,
                                     const CandidateMask& mask, std::size_t m);

// Lloyd's algorithm with k-means++ seeding; at most 100 iterations, stops
// early once no centroid moves by 1e-6 or more. Deterministic in `seed`.
LabelVector KMeansClusters(const EmbeddingMatrix& emb, std::size_t num_clusters,
                           std::uint64_t seed);

}  // namespace ses

#endif  // SES_SAMPLER_H_
