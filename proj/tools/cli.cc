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

#include "cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>

#include "CLI11.hpp"
#include "ses/coverage_bench.h"
#include "ses/dataset_io.h"
#include "ses/error.h"
#include "ses/parallel.h"
#include "ses/pipeline.h"
#include "ses/replay_memory.h"

namespace ses::cli {
namespace {

namespace fs = std::filesystem;

struct GraphFlags {
  std::string embeddings;
  std::size_t k = 0;
  int threads = DefaultThreadCount();
};

struct TreeFlags {
  std::string mode = "compressed";
  std::size_t max_height = 3;
};

struct ScoreFlags {
  GraphFlags graph;
  TreeFlags tree;
  std::string difficulty;
  bool identity_difficulty = false;
  double beta = 0.0;
  std::string log_base = "2";
};

struct SelectFlags {
  ScoreFlags score;
  std::string labels;
  std::optional<double> rate;
  std::optional<std::size_t> budget;
  std::optional<double> gamma;
  std::optional<std::size_t> kmeans;
  std::string strategy = "blue-noise";
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
};

struct ScoreCmdFlags {
  ScoreFlags score;
  std::string out;
  std::string columns_dir;
};

struct DumpFlags {
  GraphFlags graph;
  TreeFlags tree;
  std::string out;
};

struct CoverageFlags {
  GmmSpec gmm;
  std::size_t k = 0;
  std::optional<double> radius;
  double radius_quantile = 0.95;
  std::string entropy_scale = "per-volume";
  TreeFlags tree;
  int threads = DefaultThreadCount();
  std::string out;
  std::string ratios;
};

struct ReplayFlags {
  std::string mode = "per-task";
  std::size_t capacity = 100;
  std::size_t tasks = 5;
  std::size_t batches = 64;
  std::size_t slots = ReplayMemory::kDefaultSlotCount;
  std::size_t classes = 2;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

void AddGraphFlags(CLI::App* app, GraphFlags& f) {
  app->add_option("--embeddings", f.embeddings,
                  "Embedding file (.sesm binary or .csv)")
      ->required();
  app->add_option("--k", f.k, "Neighbors per sample (default round(log2 n))");
  app->add_option("--threads", f.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
}

void AddTreeFlags(CLI::App* app, TreeFlags& f) {
  app->add_option("--tree-mode", f.mode, "Encoding tree shape")
      ->check(CLI::IsMember({"binary", "compressed"}));
  app->add_option("--max-height", f.max_height,
                  "Height limit in compressed mode")
      ->check(CLI::Range(2, 1 << 20));
}

void AddScoreFlags(CLI::App* app, ScoreFlags& f) {
  AddGraphFlags(app, f.graph);
  AddTreeFlags(app, f.tree);
  auto* diff = app->add_option("--difficulty", f.difficulty,
                               "Difficulty CSV (index,value)");
  auto* ident = app->add_flag("--identity-difficulty", f.identity_difficulty,
                              "Use S_t = 1 for every sample");
  diff->excludes(ident);
  app->add_option("--beta", f.beta, "Cutoff ratio in (-1, 1)");
  app->add_option("--log-base", f.log_base, "Logarithm base")
      ->check(CLI::IsMember({"2", "e"}));
}

TreeBuildConfig ToTreeConfig(const TreeFlags& f) {
  TreeBuildConfig cfg;
  cfg.mode = f.mode == "binary" ? TreeMode::kBinary : TreeMode::kCompressed;
  cfg.max_height = f.max_height;
  return cfg;
}

// Checks that need no data, so bad combinations fail before any work.
void CheckScoreFlags(const ScoreFlags& f) {
  if (f.difficulty.empty() && !f.identity_difficulty) {
    throw Error(ErrorCode::kInvalidArgument,
                "one of --difficulty and --identity-difficulty is required");
  }
  if (!(std::abs(f.beta) < 1.0)) {
    throw Error(ErrorCode::kInvalidBeta, "beta must lie in (-1, 1)");
  }
  if (f.identity_difficulty && f.beta != 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "--beta needs a difficulty file, not --identity-difficulty");
  }
}

PipelineConfig ToPipelineConfig(const ScoreFlags& f) {
  PipelineConfig cfg;
  cfg.k = f.graph.k;
  cfg.tree = ToTreeConfig(f.tree);
  cfg.log_base = f.log_base == "e" ? LogBase::kE : LogBase::kTwo;
  cfg.beta = f.beta;
  cfg.num_threads = f.graph.threads;
  return cfg;
}

EmbeddingMatrix LoadEmbeddings(const std::string& path) {
  return ReadEmbeddings(path, GuessEmbeddingFormat(path));
}

DifficultyVector LoadDifficulty(const ScoreFlags& f, std::size_t n) {
  if (f.identity_difficulty) return {};
  return ReadDifficultyCsv(f.difficulty, n);
}

std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int CmdSelect(const SelectFlags& f, std::ostream& out) {
  CheckScoreFlags(f.score);
  SelectionConfig sel;
  sel.rate = f.rate;
  sel.budget = f.budget;
  sel.gamma = f.gamma;
  sel.seed = f.seed;
  sel.strategy = f.strategy == "top-score" ? SamplingStrategy::kTopScore
                                           : SamplingStrategy::kBlueNoise;
  if (f.gamma && f.labels.empty() && !f.kmeans) {
    throw Error(ErrorCode::kInvalidArgument,
                "--gamma needs --labels or --kmeans");
  }
  if (f.kmeans && *f.kmeans == 0) {
    throw Error(ErrorCode::kInvalidArgument, "--kmeans needs at least 1 cluster");
  }

  const EmbeddingMatrix emb = LoadEmbeddings(f.score.graph.embeddings);
  const std::size_t n = emb.rows();
  ResolveBudget(sel, n);
  const DifficultyVector difficulty = LoadDifficulty(f.score, n);
  std::optional<LabelVector> labels;
  if (f.kmeans) {
    labels = KMeansClusters(emb, *f.kmeans, f.seed);
  } else if (!f.labels.empty()) {
    labels = ReadLabelsCsv(f.labels, n);
  }

  const PipelineConfig cfg = ToPipelineConfig(f.score);
  const PipelineResult result = RunSelection(
      emb, difficulty, labels ? &*labels : nullptr, cfg, sel);
  const SelectionReport report = MakeReport(result, cfg, sel);
  fs::path report_path = f.report;
  if (report_path.empty()) {
    report_path = fs::path(f.out).replace_extension(".report.json");
  }
  WriteSelection(result.selection.indices, report, f.out, report_path);
  out << "selected " << report.m << " of " << report.n << " samples (k="
      << report.k << ", theta=" << FormatDouble(report.theta_final) << ")\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return kExitOk;
}

int CmdScore(const ScoreCmdFlags& f, std::ostream& out) {
  CheckScoreFlags(f.score);
  const EmbeddingMatrix emb = LoadEmbeddings(f.score.graph.embeddings);
  const DifficultyVector difficulty = LoadDifficulty(f.score, emb.rows());
  PipelineConfig cfg = ToPipelineConfig(f.score);
  cfg.compute_phi = true;
  const ScoredDataset scored = ScoreDataset(emb, difficulty, cfg);

  std::string csv = "index,s_e,phi,s_t,S\n";
  for (std::size_t i = 0; i < scored.score.size(); ++i) {
    csv += std::to_string(i) + "," + FormatDouble(scored.s_e[i]) + "," +
           FormatDouble(scored.phi[i]) + "," + FormatDouble(scored.s_t[i]) +
           "," + FormatDouble(scored.score[i]) + "\n";
  }
  WriteTextFile(f.out, csv);
  if (!f.columns_dir.empty()) {
    const fs::path dir = f.columns_dir;
    fs::create_directories(dir);
    WriteScalarCsv(dir / "s_e.csv", scored.s_e);
    WriteScalarCsv(dir / "phi.csv", scored.phi);
    WriteScalarCsv(dir / "s_t.csv", scored.s_t);
    WriteScalarCsv(dir / "score.csv", scored.score);
  }
  const double sum_phi =
      std::accumulate(scored.phi.begin(), scored.phi.end(), 0.0);
  out << "n=" << scored.score.size() << " k=" << scored.k
      << " H=" << FormatDouble(scored.graph_entropy)
      << " sum_phi=" << FormatDouble(sum_phi) << "\n";
  return kExitOk;
}

int CmdGraph(const DumpFlags& f, std::ostream& out) {
  const EmbeddingMatrix emb = LoadEmbeddings(f.graph.embeddings);
  const std::size_t k = f.graph.k == 0 ? DefaultK(emb.rows()) : f.graph.k;
  const SampleGraph graph = BuildKnnGraph(emb, k, f.graph.threads);
  WriteTextFile(f.out, graph.ToCsv());
  out << "nodes=" << graph.num_nodes() << " edges=" << graph.num_edges()
      << " k=" << k << "\n";
  return kExitOk;
}

int CmdTree(const DumpFlags& f, std::ostream& out) {
  const EmbeddingMatrix emb = LoadEmbeddings(f.graph.embeddings);
  const std::size_t k = f.graph.k == 0 ? DefaultK(emb.rows()) : f.graph.k;
  const SampleGraph graph = BuildKnnGraph(emb, k, f.graph.threads);
  const EncodingTree tree = BuildEncodingTree(graph, ToTreeConfig(f.tree));
  WriteTextFile(f.out, tree.ToJson().dump(2) + "\n");
  out << "nodes=" << tree.num_nodes() << " height=" << tree.height()
      << " H=" << FormatDouble(GraphEntropyFromEdges(graph, tree)) << "\n";
  return kExitOk;
}

int CmdBenchCoverage(const CoverageFlags& f, std::ostream& out) {
  CoverageConfig cfg;
  cfg.k = f.k;
  cfg.radius = f.radius;
  cfg.radius_quantile = f.radius_quantile;
  cfg.tree = ToTreeConfig(f.tree);
  cfg.entropy_scale = f.entropy_scale == "unscaled" ? EntropyScale::kUnscaled
                                                    : EntropyScale::kPerVolume;
  cfg.num_threads = f.threads;
  if (!(f.radius_quantile > 0.0 && f.radius_quantile <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "--radius-quantile must lie in (0, 1]");
  }
  const CoverageReport report = RunCoverageCheck(f.gmm, cfg);
  nlohmann::json j = report.SummaryJson();
  j["classes"] = f.gmm.num_classes;
  j["per_class"] = f.gmm.per_class;
  j["dim"] = f.gmm.dim;
  j["seed"] = f.gmm.seed;
  const std::string text = j.dump(2) + "\n";
  if (!f.out.empty()) WriteTextFile(f.out, text);
  if (!f.ratios.empty()) WriteTextFile(f.ratios, report.RatiosCsv());
  out << text;
  return kExitOk;
}

int CmdReplaySim(const ReplayFlags& f, std::ostream& out) {
  ReplaySelector selector;
  selector.seed = f.seed;
  selector.pipeline.num_threads = f.threads;
  const bool per_task = f.mode == "per-task";
  ReplayMemory mem = per_task ? ReplayMemory::PerTask(f.capacity)
                              : ReplayMemory::MergeReduce(f.capacity, f.slots);
  const std::size_t steps = per_task ? f.tasks : f.batches;

  GmmSpec spec;
  spec.num_classes = f.classes;
  spec.per_class = f.per_class;
  spec.dim = f.dim;
  spec.seed = f.seed;
  const GaussianMixture stream_mixture = MixtureOf(spec);

  SampleId next_id = 0;
  bool ok = true;
  for (std::size_t step = 0; step < steps; ++step) {
    EmbeddingMatrix emb;
    if (per_task) {
      // Each task draws its own class centers.
      GmmSpec task_spec = spec;
      task_spec.seed = f.seed + 1000003 * (step + 1);
      emb = GenerateGmm(task_spec).first;
    } else {
      emb = SampleMixture(stream_mixture, f.per_class, f.seed + step + 1).first;
    }
    std::vector<SampleId> ids(emb.rows());
    std::iota(ids.begin(), ids.end(), next_id);
    next_id += static_cast<SampleId>(emb.rows());
    const ReplayBatch batch{ids, &emb, {}};

    std::string line;
    if (per_task) {
      mem.UpdatePerTask(static_cast<int>(step), batch, selector);
      std::size_t lo = mem.capacity();
      std::size_t hi = 0;
      line = "task " + std::to_string(step) + ": counts";
      for (int t : mem.tasks()) {
        const std::size_t c = mem.CountForTask(t);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        line += " " + std::to_string(c);
      }
      if (hi - lo > 1) ok = false;
    } else {
      mem.UpdateMergeReduce(batch, selector);
      std::size_t represented = 0;
      line = "batch " + std::to_string(step) + ": represented";
      for (const auto& slot : mem.slots()) {
        represented += slot.represented_count;
        if (slot.represented_count < slot.members.size()) ok = false;
        line += " " + std::to_string(slot.represented_count);
      }
      if (represented != mem.streamed()) ok = false;
    }
    if (mem.size() > mem.capacity()) ok = false;
    out << line << " (size " << mem.size() << ")\n";
  }
  if (!f.out.empty()) WriteTextFile(f.out, mem.Snapshot().dump(2) + "\n");
  out << (ok ? "invariants hold\n" : "invariant violated\n");
  return ok ? kExitOk : kExitDataError;
}

int ExitFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidBeta:
      return kExitUsage;
    case ErrorCode::kInfeasibleBudget:
    case ErrorCode::kCapacityTooSmall:
      return kExitInfeasible;
    default:
      return kExitDataError;
  }
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Structural-entropy sample selection", "ses"};
  app.require_subcommand(1);

  SelectFlags select;
  auto* select_cmd = app.add_subcommand("select", "Score and select a subset");
  AddScoreFlags(select_cmd, select.score);
  select_cmd->add_option("--labels", select.labels, "Label CSV (index,value)");
  auto* rate = select_cmd->add_option("--rate", select.rate,
                                      "Fraction of samples to keep");
  auto* budget = select_cmd->add_option("--budget", select.budget,
                                        "Number of samples to keep");
  rate->excludes(budget);
  select_cmd->add_option("--gamma", select.gamma, "Per-class imbalance factor");
  auto* kmeans = select_cmd->add_option(
      "--kmeans", select.kmeans, "Derive labels from k-means with C clusters");
  kmeans->excludes("--labels");
  select_cmd->add_option("--strategy", select.strategy, "Sampling strategy")
      ->check(CLI::IsMember({"blue-noise", "top-score"}));
  select_cmd->add_option("--seed", select.seed, "Random seed");
  select_cmd->add_option("--out", select.out, "Index output path")->required();
  select_cmd->add_option("--report", select.report,
                         "Report path (default <out>.report.json)");

  ScoreCmdFlags score;
  auto* score_cmd = app.add_subcommand("score", "Write per-sample scores");
  AddScoreFlags(score_cmd, score.score);
  score_cmd->add_option("--out", score.out, "CSV output path")->required();
  score_cmd->add_option("--columns-dir", score.columns_dir,
                        "Also write each column as an index,value CSV");

  DumpFlags graph;
  auto* graph_cmd = app.add_subcommand("graph", "Dump the kNN graph as CSV");
  AddGraphFlags(graph_cmd, graph.graph);
  graph_cmd->add_option("--out", graph.out, "CSV output path")->required();

  DumpFlags tree;
  auto* tree_cmd = app.add_subcommand("tree", "Dump the encoding tree as JSON");
  AddGraphFlags(tree_cmd, tree.graph);
  AddTreeFlags(tree_cmd, tree.tree);
  tree_cmd->add_option("--out", tree.out, "JSON output path")->required();

  CoverageFlags cov;
  auto* cov_cmd = app.add_subcommand("bench-coverage",
                                     "Coverage bound check on a synthetic GMM");
  cov_cmd->add_option("--classes", cov.gmm.num_classes, "Mixture components")
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--per-class", cov.gmm.per_class, "Samples per class")
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--dim", cov.gmm.dim, "Dimension")
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--center-scale", cov.gmm.center_scale,
                      "Standard deviation of the class centers");
  cov_cmd->add_option("--seed", cov.gmm.seed, "Random seed");
  cov_cmd->add_option("--k", cov.k, "Neighbors per sample");
  cov_cmd->add_option("--radius", cov.radius, "Ball radius r")
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--radius-quantile", cov.radius_quantile,
                      "Quantile of kNN edge lengths used as r");
  cov_cmd->add_option("--entropy-scale", cov.entropy_scale,
                      "S_e as scored, or without the 1/vol(V) factor")
      ->check(CLI::IsMember({"per-volume", "unscaled"}));
  AddTreeFlags(cov_cmd, cov.tree);
  cov_cmd->add_option("--threads", cov.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  cov_cmd->add_option("--out", cov.out, "Summary JSON path");
  cov_cmd->add_option("--ratios", cov.ratios, "Per-sample CSV path");

  ReplayFlags replay;
  auto* replay_cmd = app.add_subcommand(
      "replay-sim", "Stream synthetic tasks or batches through a replay memory");
  replay_cmd->add_option("--mode", replay.mode, "Memory layout")
      ->check(CLI::IsMember({"per-task", "merge-reduce"}));
  replay_cmd->add_option("--capacity", replay.capacity, "Memory size M");
  replay_cmd->add_option("--tasks", replay.tasks, "Tasks (per-task mode)");
  replay_cmd->add_option("--batches", replay.batches,
                         "Batches (merge-reduce mode)");
  replay_cmd->add_option("--slots", replay.slots, "Slot count");
  replay_cmd->add_option("--classes", replay.classes, "Classes per task/batch")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_option("--per-class", replay.per_class,
                         "Samples per class in each task/batch")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_option("--dim", replay.dim, "Dimension")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_option("--seed", replay.seed, "Random seed");
  replay_cmd->add_option("--threads", replay.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_option("--out", replay.out, "Snapshot JSON path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*select_cmd) return CmdSelect(select, out);
    if (*score_cmd) return CmdScore(score, out);
    if (*graph_cmd) return CmdGraph(graph, out);
    if (*tree_cmd) return CmdTree(tree, out);
    if (*cov_cmd) return CmdBenchCoverage(cov, out);
    if (*replay_cmd) return CmdReplaySim(replay, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitFor(e.code());
  } catch (const std::exception& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace ses::cli
