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

#include "ses/error.h"

namespace ses {

std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return "IoError";
    case ErrorCode::kFormatError:
      return "FormatError";
    case ErrorCode::kEmptyDataset:
      return "EmptyDataset";
    case ErrorCode::kMissingIndex:
      return "MissingIndex";
    case ErrorCode::kDuplicateIndex:
      return "DuplicateIndex";
    case ErrorCode::kZeroVector:
      return "ZeroVector";
    case ErrorCode::kInvalidK:
      return "InvalidK";
    case ErrorCode::kIsolatedNode:
      return "IsolatedNode";
    case ErrorCode::kSameNode:
      return "SameNode";
    case ErrorCode::kTreeGraphMismatch:
      return "TreeGraphMismatch";
    case ErrorCode::kTooLarge:
      return "TooLarge";
    case ErrorCode::kInvalidBeta:
      return "InvalidBeta";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kInfeasibleBudget:
      return "InfeasibleBudget";
    case ErrorCode::kCapacityTooSmall:
      return "CapacityTooSmall";
    case ErrorCode::kNoMergeablePair:
      return "NoMergeablePair";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorName(code)) + ": " + message),
      code_(code) {}

}  // namespace ses
