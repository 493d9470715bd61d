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

#include "ses/coverage_bench.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace ses {
namespace {

using testing::ErrorOf;

TEST(GenerateGmmTest, ShapesAndLabels) {
  const auto [emb, labels] = GenerateGmm({3, 4, 5, 1, 1.0});
  EXPECT_EQ(emb.rows(), 12u);
  EXPECT_EQ(emb.cols(), 5u);
  EXPECT_EQ(labels.num_classes, 3);
  EXPECT_EQ(labels.labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}));
}

TEST(GenerateGmmTest, SingleScalarClass) {
  const auto [emb, labels] = GenerateGmm({1, 3, 1, 0, 1.0});
  EXPECT_EQ(emb.rows(), 3u);
  EXPECT_EQ(emb.cols(), 1u);
}

TEST(GenerateGmmTest, Deterministic) {
  const GmmSpec spec{10, 20, 16, 99, 1.0};
  EXPECT_EQ(GenerateGmm(spec).first, GenerateGmm(spec).first);
  GmmSpec other = spec;
  other.seed = 100;
  EXPECT_FALSE(GenerateGmm(spec).first == GenerateGmm(other).first);
  EXPECT_EQ(ErrorOf([] { GenerateGmm({0, 1, 1, 0, 1.0}); }), "InvalidArgument");
}

TEST(GenerateGmmTest, SamplesCenterOnMixture) {
  const GmmSpec spec{2, 5000, 3, 7, 4.0};
  const GaussianMixture mix = MixtureOf(spec);
  const auto [emb, labels] = GenerateGmm(spec);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < 5000; ++i) mean += emb.row(c * 5000 + i)[j];
      EXPECT_NEAR(mean / 5000, mix.center(c)[j], 0.06);
    }
  }
}

TEST(BallCoverageTest, InfiniteRadiusCoversEverything) {
  const GaussianMixture mix = MixtureOf({3, 1, 4, 2, 1.0});
  const std::vector<double> u = {0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(BallCoverage(mix, u, INFINITY).probability, 1.0);
  EXPECT_NEAR(BallCoverage(mix, u, 1e3).probability, 1.0, 1e-12);
}

TEST(BallCoverageTest, OneSigmaInterval) {
  GaussianMixture mix;
  mix.dim = 1;
  mix.centers = {0.25};
  const std::vector<double> u = {0.25};
  EXPECT_NEAR(BallCoverage(mix, u, 1.0).probability, std::erf(1.0 / std::sqrt(2.0)),
              1e-12);
  EXPECT_NEAR(BallCoverage(mix, u, 1.0).probability, 0.6827, 1e-4);
}

TEST(BallCoverageTest, Errors) {
  const GaussianMixture mix = MixtureOf({2, 1, 2, 0, 1.0});
  const std::vector<double> u = {0, 0};
  EXPECT_EQ(ErrorOf([&] { BallCoverage(mix, u, 0.0); }), "InvalidArgument");
  const std::vector<double> wrong = {0, 0, 0};
  EXPECT_EQ(ErrorOf([&] { BallCoverage(mix, wrong, 1.0); }), "LengthMismatch");
}

TEST(BallCoverageTest, ChiSquareMatchesMonteCarlo) {
  const GmmSpec spec{10, 5, 16, 5, 1.0};
  const GaussianMixture mix = MixtureOf(spec);
  // Points drawn from the mixture itself, so most masses are far from 0 and 1.
  const EmbeddingMatrix points = GenerateGmm(spec).first;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> radius(4.0, 6.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = points.row(trial);
    const double r = radius(rng);
    const CoverageEstimate exact = BallCoverage(mix, u, r);
    const CoverageEstimate mc = BallCoverage(mix, u, r, CoverageMethod::kMonteCarlo,
                                             1000000, 100 + trial);
    const double se = std::max(mc.std_error, 1e-6);
    EXPECT_LE(std::abs(exact.probability - mc.probability), 3.0 * se)
        << "trial " << trial << " r=" << r;
  }
}

TEST(PercentileTest, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(Percentile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Percentile({5}, 0.9), 5.0);
  EXPECT_DOUBLE_EQ(Percentile({0, 10}, 0.95), 9.5);
}

TEST(RunCoverageCheckTest, DegenerateSingleClass) {
  const CoverageReport r = RunCoverageCheck({1, 50, 16, 3, 1.0});
  EXPECT_EQ(r.n, 50u);
  EXPECT_EQ(r.ratio.size(), 50u);
  for (double x : r.ratio) EXPECT_TRUE(std::isfinite(x));
  EXPECT_GT(r.r, 0.0);
}

TEST(RunCoverageCheckTest, BoundIncreasesWithEntropy) {
  const CoverageReport r = RunCoverageCheck({3, 40, 4, 8, 1.0});
  for (std::size_t i = 0; i < r.n; ++i) {
    for (std::size_t j = 0; j < r.n; ++j) {
      if (r.s_e[i] < r.s_e[j]) EXPECT_LT(r.bound[i], r.bound[j]);
    }
  }
}

TEST(RunCoverageCheckTest, ReproducibleSummary) {
  const GmmSpec spec{4, 50, 8, 12, 1.0};
  CoverageConfig cfg;
  cfg.num_threads = 3;
  const CoverageReport a = RunCoverageCheck(spec, cfg);
  const CoverageReport b = RunCoverageCheck(spec);
  EXPECT_EQ(a.SummaryJson(), b.SummaryJson());
  EXPECT_EQ(a.RatiosCsv(), b.RatiosCsv());
  EXPECT_TRUE(a.SummaryJson().contains("p90"));
}

TEST(RunCoverageCheckTest, FixedRadiusOverridesPolicy) {
  CoverageConfig cfg;
  cfg.radius = 2.5;
  EXPECT_EQ(RunCoverageCheck({2, 30, 4, 1, 1.0}, cfg).r, 2.5);
}

}  // namespace
}  // namespace ses
