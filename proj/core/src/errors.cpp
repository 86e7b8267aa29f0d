// Copyright 2026 The flsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flsim/errors.hpp"

namespace flsim {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kRidgeExhausted: return "RidgeExhausted";
    case ErrorCode::kDegenerateHistory: return "DegenerateHistory";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidDimension: return "InvalidDimension";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kOvertrim: return "OvertrimError";
    case ErrorCode::kTooFewClients: return "TooFewClients";
    case ErrorCode::kDegenerateStatistics: return "DegenerateStatistics";
    case ErrorCode::kTooFewExamples: return "TooFewExamples";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kInvalidCounts: return "InvalidCounts";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace flsim
