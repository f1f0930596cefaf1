// Copyright 2026 The MAPSS Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace mapss {

/// Failure categories surfaced by the core. The numeric values are part of the
/// C ABI (see mapss.h) and must not be reordered.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kSilentInput = 2,
  kLengthMismatch = 3,
  kDelayTooLong = 4,
  kInvalidParams = 5,
  kTooShort = 6,
  kFormatError = 7,
  kShapeError = 8,
  kDimensionMismatch = 9,
  kDegenerateGraph = 10,
  kEigSolverFailure = 11,
  kNonPositiveSpectrum = 12,
  kIndexOutOfRange = 13,
  kSolveFailure = 14,
  kSingleSource = 15,
  kDegenerateMoments = 16,
  kComplementNotPD = 17,
  kEmptySet = 18,
  kZeroVariance = 19,
  kInsufficientSystems = 20,
  kIoError = 21,
  kConfigError = 22,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mapss
