// Copyright 2026 The MMFDL Authors.
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

#include "mmfdl/error.hpp"

namespace mmfdl {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kUnlexableCharacter: return "UnlexableCharacter";
    case Errc::kUnterminatedBracket: return "UnterminatedBracket";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kUnknownToken: return "UnknownToken";
    case Errc::kSequenceTooLong: return "SequenceTooLong";
    case Errc::kUnpairedRingClosure: return "UnpairedRingClosure";
    case Errc::kUnmatchedParenthesis: return "UnmatchedParenthesis";
    case Errc::kUnknownElement: return "UnknownElement";
    case Errc::kMalformedSmiles: return "MalformedSmiles";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kNonFiniteInput: return "NonFiniteInput";
    case Errc::kOddDimension: return "OddDimension";
    case Errc::kNonFiniteGradient: return "NonFiniteGradient";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
    case Errc::kBadCheckpoint: return "BadCheckpoint";
    case Errc::kDegenerateColumn: return "DegenerateColumn";
    case Errc::kTooFewSamples: return "TooFewSamples";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kMissingColumn: return "MissingColumn";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kTooSmall: return "TooSmall";
    case Errc::kZeroVariance: return "ZeroVariance";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kEmptyTrainSet: return "EmptyTrainSet";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

ErrorCategory errc_category(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidConfig:
      return ErrorCategory::kConfig;
    case Errc::kShapeMismatch:
    case Errc::kNonFiniteInput:
    case Errc::kOddDimension:
    case Errc::kNonFiniteGradient:
    case Errc::kNonFiniteLoss:
    case Errc::kDegenerateColumn:
    case Errc::kZeroVariance:
    case Errc::kZeroVector:
      return ErrorCategory::kNumeric;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace mmfdl
