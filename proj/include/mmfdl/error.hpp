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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmfdl {

/// Every failure raised by the library carries one of these codes so callers
/// (the CLI in particular) can map it onto an exit status.
enum class Errc {
  // chemlex
  kUnlexableCharacter,
  kUnterminatedBracket,
  kEmptyCorpus,
  kUnknownToken,
  kSequenceTooLong,
  // molgraph
  kUnpairedRingClosure,
  kUnmatchedParenthesis,
  kUnknownElement,
  kMalformedSmiles,
  // ecfp
  kLengthMismatch,
  // numcore / encoders
  kShapeMismatch,
  kNonFiniteInput,
  kOddDimension,
  kNonFiniteGradient,
  kNonFiniteLoss,
  kBadCheckpoint,
  // fusion
  kDegenerateColumn,
  kTooFewSamples,
  kInvalidConfig,
  // bench
  kMissingColumn,
  kEmptyDataset,
  kTooSmall,
  kZeroVariance,
  kZeroVector,
  kEmptyTrainSet,
  kIo,
};

std::string_view errc_name(Errc code) noexcept;

/// Coarse classification used for process exit codes.
enum class ErrorCategory { kConfig, kData, kNumeric };

ErrorCategory errc_category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mmfdl
