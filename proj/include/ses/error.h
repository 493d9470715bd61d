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

#ifndef SES_ERROR_H_
#define SES_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ses {

// Every failure surfaced by the library carries one of these codes. The
// names returned by ErrorName() are stable and machine-readable; the CLI
// prints them verbatim.
enum class ErrorCode {
  kIoError,
  kFormatError,
  kEmptyDataset,
  kMissingIndex,
  kDuplicateIndex,
  kZeroVector,
  kInvalidK,
  kIsolatedNode,
  kSameNode,
  kTreeGraphMismatch,
  kTooLarge,
  kInvalidBeta,
  kLengthMismatch,
  kInfeasibleBudget,
  kCapacityTooSmall,
  kNoMergeablePair,
  kInvalidArgument,
};

std::string_view ErrorName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  std::string_view name() const { return ErrorName(code_); }

 private:
  ErrorCode code_;
};

}  // namespace ses

#endif  // SES_ERROR_H_
