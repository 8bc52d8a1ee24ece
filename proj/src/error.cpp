// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/error.hpp"

namespace hybridq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyTensor: return "empty_tensor";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kCodeOutOfRange: return "code_out_of_range";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kMalformedJson: return "malformed_json";
    case ErrorCode::kUnknownFormatVersion: return "unknown_format_version";
    case ErrorCode::kRecordOutOfRange: return "record_out_of_range";
    case ErrorCode::kOverlappingRecords: return "overlapping_records";
    case ErrorCode::kDuplicateName: return "duplicate_name";
    case ErrorCode::kInvalidName: return "invalid_name";
    case ErrorCode::kDtypeQuantMismatch: return "dtype_quant_mismatch";
    case ErrorCode::kMissingWeight: return "missing_weight";
    case ErrorCode::kSampleCountMismatch: return "sample_count_mismatch";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kPathNotFound: return "path_not_found";
    case ErrorCode::kNoSites: return "no_sites";
    case ErrorCode::kUnpartitionedSite: return "unpartitioned_site";
    case ErrorCode::kNotPostSoftmax: return "not_post_softmax";
    case ErrorCode::kNotExecutable: return "not_executable";
    case ErrorCode::kMissingQuantParams: return "missing_quant_params";
    case ErrorCode::kAlreadyQuantized: return "already_quantized";
    case ErrorCode::kUncalibrated: return "uncalibrated";
  }
  return "unknown";
}

}  // namespace hybridq
