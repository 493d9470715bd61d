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

#include "ses/pipeline.h"

#include <utility>

#include "ses/error.h"

namespace ses {

ScoredDataset ScoreDataset(const EmbeddingMatrix& emb,
                           std::span<const double> difficulty,
                           const PipelineConfig& config) {
  const std::size_t n = emb.rows();
  if (!difficulty.empty() && difficulty.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "difficulty has " + std::to_string(difficulty.size()) +
                    " entries for " + std::to_string(n) + " samples");
  }
  if (difficulty.empty() && config.beta != 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "a nonzero beta needs a difficulty score");
  }
  if (n < 2) {
    throw Error(ErrorCode::kInvalidK, "a kNN graph needs at least 2 samples");
  }

  ScoredDataset out;
  out.k = config.k == 0 ? DefaultK(n) : config.k;
  out.mask = difficulty.empty() ? CandidateMask(n, 1)
                                : ApplyCutoff(difficulty, config.beta);
  out.graph = BuildKnnGraph(emb, out.k, config.num_threads);
  out.tree = BuildEncodingTree(out.graph, config.tree);
  out.graph_entropy = GraphEntropyFromEdges(out.graph, out.tree, config.log_base);
  out.s_e = NodeStructuralEntropy(out.graph, out.tree, config.log_base,
                                  config.num_threads);
  if (config.compute_phi) {
    out.phi = ShapleyClosedForm(out.graph, out.tree, config.log_base,
                                config.num_threads);
  }
  out.s_t = difficulty.empty() ? std::vector<double>(n, 1.0)
                               : Normalize(difficulty);
  out.score = Combine(Normalize(out.s_e), out.s_t);
  return out;
}

PipelineResult RunSelection(const EmbeddingMatrix& emb,
                            std::span<const double> difficulty,
                            const LabelVector* labels,
                            const PipelineConfig& config,
                            const SelectionConfig& selection) {
  // Fail on bad budgets before any heavy work.
  ResolveBudget(selection, emb.rows());
  if (selection.gamma && labels == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "gamma requires class labels");
  }
  PipelineResult result;
  result.scored = ScoreDataset(emb, difficulty, config);
  result.selection = Select(result.scored.score, result.scored.mask,
                            result.scored.graph, selection, labels);
  return result;
}

SelectionReport MakeReport(const PipelineResult& result,
                           const PipelineConfig& config,
                           const SelectionConfig& selection) {
  SelectionReport report;
  report.n = result.scored.score.size();
  report.m = result.selection.indices.size();
  report.theta_final = result.selection.theta_final;
  report.k = result.scored.k;
  report.beta = config.beta;
  report.gamma = selection.gamma;
  report.per_class_counts = result.selection.per_class_counts;
  report.graph_entropy = result.scored.graph_entropy;
  report.seed = selection.seed;
  report.strategy = selection.strategy == SamplingStrategy::kBlueNoise
                        ? "blue-noise"
                        : "top-score";
  report.warnings = result.selection.warnings;
  return report;
}

}  // namespace ses
