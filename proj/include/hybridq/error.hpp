// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridq {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyTensor,
  kNonFinite,
  kShapeMismatch,
  kCodeOutOfRange,
  // package / trace loading
  kMissingFile,
  kMalformedJson,
  kUnknownFormatVersion,
  kRecordOutOfRange,
  kOverlappingRecords,
  kDuplicateName,
  kInvalidName,
  kDtypeQuantMismatch,
  kMissingWeight,
  kSampleCountMismatch,
  kIo,
  // graph / calibration
  kPathNotFound,
  kNoSites,
  kUnpartitionedSite,
  kNotPostSoftmax,
  kNotExecutable,
  kMissingQuantParams,
  // pipeline
  kAlreadyQuantized,
  kUncalibrated,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `code()` is stable; the message is
/// human-readable and names the offending path or value where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hybridq
