// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "hybridq/quant_params.hpp"
#include "hybridq/tensor.hpp"

namespace hybridq {

/// Post-softmax values may exceed 1 by at most this much.
inline constexpr double kSoftmaxTolerance = 1e-6;

/// Round half away from zero.
double round_half_away(double x) noexcept;

// Uniform (affine) path for convolution weights.
//
//   delta = (max - min) / (2^b - 1)
//   zero_point = clamp(round(-min / delta), 0, 2^b - 1)
//   q = clamp(round(w / delta) + zero_point, 0, 2^b - 1)
//   w' = (q - zero_point) * delta
AffineParams affine_params(double w_min, double w_max, const QuantConfig& cfg);

std::uint8_t quantize_uniform(float w, const AffineParams& p) noexcept;
QuantTensor quantize_uniform(const Tensor& w, const AffineParams& p);
Tensor dequantize_uniform(const QuantTensor& q);

// log2 path for post-softmax activations.
//
//   log_min = log2(a_min + eps), log_max = log2(a_max + eps)
//   delta = (log_max - log_min) / (2^b - 1)
//   zero_point = round(-log_min / delta)
//   q = clamp(round(log2(a + eps) / delta) + zero_point, 0, 2^b - 1)
//   a' = 2^((q - zero_point) * delta)
LogParams log2_params(double a_min, double a_max, const QuantConfig& cfg);

// Scalar form does not range-check; callers feeding post-softmax tensors go
// through the Tensor overload.
std::uint8_t quantize_log2(float a, const LogParams& p) noexcept;
QuantTensor quantize_log2(const Tensor& a, const LogParams& p);
Tensor dequantize_log2(const QuantTensor& q);

/// Decode with whichever scheme the tensor carries.
Tensor dequantize(const QuantTensor& q);

}  // namespace hybridq
