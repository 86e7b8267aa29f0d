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

#ifndef FLSIM_ERRORS_HPP_
#define FLSIM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace flsim {

enum class ErrorCode {
  kSingularSystem,
  kRidgeExhausted,
  kDegenerateHistory,
  kDimensionMismatch,
  kInvalidDimension,
  kInvalidK,
  kOvertrim,
  kTooFewClients,
  kDegenerateStatistics,
  kTooFewExamples,
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kDegenerateSample,
  kInvalidCounts,
  kInvalidArgument,
  kConfig,
  kMissingArtifact,
  kCapExceeded,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flsim

#endif  // FLSIM_ERRORS_HPP_
