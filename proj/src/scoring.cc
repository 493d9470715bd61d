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

#include "ses/scoring.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ses/error.h"

namespace ses {

std::vector<double> Normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 1.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = (values[i] - min) / range;
    out[i] = kNormalizeFloor + (1.0 - kNormalizeFloor) * t;
  }
  return out;
}

std::vector<double> Combine(std::span<const double> structural,
                            std::span<const double> difficulty) {
  if (structural.size() != difficulty.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "structural scores have " + std::to_string(structural.size()) +
                    " entries, difficulty has " +
                    std::to_string(difficulty.size()));
  }
  std::vector<double> out(structural.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = structural[i] * difficulty[i];
  }
  return out;
}

CandidateMask ApplyCutoff(std::span<const double> raw_difficulty, double beta) {
  if (!(beta >= -1.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidBeta,
                "beta = " + std::to_string(beta) + " outside [-1, 1]");
  }
  const std::size_t n = raw_difficulty.size();
  CandidateMask mask(n, 1);
  // The epsilon keeps products like 0.7 * 10 from flooring to 6.
  const auto removed = static_cast<std::size_t>(
      std::floor(std::abs(beta) * static_cast<double>(n) + 1e-9));
  if (removed == 0) return mask;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const bool hardest = beta > 0.0;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return hardest ? raw_difficulty[a] > raw_difficulty[b]
                                    : raw_difficulty[a] < raw_difficulty[b];
                   });
  for (std::size_t i = 0; i < std::min(removed, n); ++i) mask[order[i]] = 0;
  return mask;
}

std::size_t CountCandidates(const CandidateMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

}  // namespace ses
