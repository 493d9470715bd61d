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

// End-to-end scoring: kNN graph -> encoding tree -> node-level structural
// entropy -> normalized combination with difficulty -> cutoff mask.

#ifndef SES_PIPELINE_H_
#define SES_PIPELINE_H_

#include <optional>
#include <span>
#include <vector>

#include "ses/dataset_io.h"
#include "ses/encoding_tree.h"
#include "ses/entropy.h"
#include "ses/knn_graph.h"
#include "ses/sampler.h"
#include "ses/scoring.h"

namespace ses {

struct PipelineConfig {
  std::size_t k = 0;  // 0 picks DefaultK(n)
  TreeBuildConfig tree;
  LogBase log_base = LogBase::kTwo;
  double beta = 0.0;
  bool compute_phi = false;
  int num_threads = 1;
};

struct ScoredDataset {
  std::size_t k = 0;
  SampleGraph graph;
  EncodingTree tree;
  double graph_entropy = 0.0;     // in the configured log base
  std::vector<double> s_e;        // raw node-level structural entropy
  std::vector<double> phi;        // empty unless compute_phi
  std::vector<double> s_t;        // normalized difficulty (all ones if none)
  std::vector<double> score;      // Normalize(s_e) * s_t
  CandidateMask mask;
};

// `difficulty` empty means identity difficulty: s_t = 1 and beta must be 0.
ScoredDataset ScoreDataset(const EmbeddingMatrix& emb,
                           std::span<const double> difficulty,
                           const PipelineConfig& config);

struct PipelineResult {
  ScoredDataset scored;
  SelectionResult selection;
};

PipelineResult RunSelection(const EmbeddingMatrix& emb,
                            std::span<const double> difficulty,
                            const LabelVector* labels,
                            const PipelineConfig& config,
                            const SelectionConfig& selection);

SelectionReport MakeReport(const PipelineResult& result,
                           const PipelineConfig& config,
                           const SelectionConfig& selection);

}  // namespace ses

#endif  // SES_PIPELINE_H_
