// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace hybridq {

struct QuantConfig {
  int bits = 8;
  double epsilon = 1e-5;

  // Throws kInvalidArgument unless 2 <= bits <= 8 and epsilon > 0.
  void validate() const;

  std::uint32_t max_code() const noexcept { return (1u << bits) - 1u; }
};

/// Uniform affine parameters for a weight tensor. Codes decode as
/// (q - zero_point) * delta.
///
/// A degenerate range (min == max) stores delta = FLT_MIN and
/// zero_point = 0; codes then decode relative to `min`, so a constant
/// tensor reconstructs exactly.
struct AffineParams {
  double delta = 1.0;
  std::int32_t zero_point = 0;
  double min = 0.0;
  double max = 0.0;
  int bits = 8;

  bool degenerate() const noexcept { return min == max; }
  std::uint32_t max_code() const noexcept { return (1u << bits) - 1u; }
  float decode(std::uint32_t code) const noexcept;

  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

/// log2-domain parameters for post-softmax activations. `min`/`max` are the
/// linear-domain calibration bounds; log_min/log_max are log2(bound + epsilon).
/// Codes decode as 2^((q - zero_point) * delta).
struct LogParams {
  double delta = 1.0;
  std::int32_t zero_point = 0;
  double min = 0.0;
  double max = 1.0;
  double log_min = 0.0;
  double log_max = 0.0;
  double epsilon = 1e-5;
  int bits = 8;

  bool degenerate() const noexcept { return min == max; }
  std::uint32_t max_code() const noexcept { return (1u << bits) - 1u; }
  float decode(std::uint32_t code) const noexcept;

  friend bool operator==(const LogParams&, const LogParams&) = default;
};

}  // namespace hybridq
