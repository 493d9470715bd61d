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

#ifndef SES_SCORING_H_
#define SES_SCORING_H_

#include <cstdint>
#include <span>
#include <vector>

namespace ses {

// Lower end of the normalized range. Keeps every product score positive.
inline constexpr double kNormalizeFloor = 1e-6;

// Min-max map onto [kNormalizeFloor, 1]. A constant input maps to all ones.
std::vector<double> Normalize(std::span<const double> values);

// Elementwise product of two normalized score vectors. Throws
// LengthMismatch when sizes differ.
std::vector<double> Combine(std::span<const double> structural,
                            std::span<const double> difficulty);

// 1 marks a sample the sampler may pick, 0 one removed by the cutoff.
using CandidateMask = std::vector<std::uint8_t>;

// beta > 0 drops the floor(beta * n) hardest samples, beta < 0 the
// floor(|beta| * n) easiest; ties drop the lower index first. Throws
// InvalidBeta unless -1 <= beta <= 1.
CandidateMask ApplyCutoff(std::span<const double> raw_difficulty, double beta);

std::size_t CountCandidates(const CandidateMask& mask);

}  // namespace ses

#endif  // SES_SCORING_H_
