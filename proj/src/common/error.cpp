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

#include "common/error.hpp"

namespace mapss {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSilentInput: return "SilentInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDelayTooLong: return "DelayTooLong";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateGraph: return "DegenerateGraph";
    case ErrorCode::kEigSolverFailure: return "EigSolverFailure";
    case ErrorCode::kNonPositiveSpectrum: return "NonPositiveSpectrum";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kSolveFailure: return "SolveFailure";
    case ErrorCode::kSingleSource: return "SingleSource";
    case ErrorCode::kDegenerateMoments: return "DegenerateMoments";
    case ErrorCode::kComplementNotPD: return "ComplementNotPD";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kInsufficientSystems: return "InsufficientSystems";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace mapss
