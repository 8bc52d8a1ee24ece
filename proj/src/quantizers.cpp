// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/quantizers.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "hybridq/error.hpp"

namespace hybridq {
namespace {

// Fallback step for constant inputs.
constexpr double kDegenerateDelta = FLT_MIN;

std::uint8_t saturate(double r, std::uint32_t max_code) noexcept {
  if (!(r > 0.0)) return 0;  // also maps NaN to 0
  if (r >= static_cast<double>(max_code)) return static_cast<std::uint8_t>(max_code);
  return static_cast<std::uint8_t>(r);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kNonFinite, std::string("non-finite value for ") + what);
  }
}

}  // namespace

void QuantConfig::validate() const {
  if (bits < 2 || bits > 8) {
    throw Error(ErrorCode::kInvalidArgument,
                "bits must be in [2, 8], got " + std::to_string(bits));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be a positive finite value");
  }
}

double round_half_away(double x) noexcept { return std::round(x); }

float AffineParams::decode(std::uint32_t code) const noexcept {
  const double steps = static_cast<double>(static_cast<std::int64_t>(code) - zero_point);
  if (degenerate()) return static_cast<float>(min + steps * delta);
  return static_cast<float>(steps * delta);
}

float LogParams::decode(std::uint32_t code) const noexcept {
  if (degenerate()) return static_cast<float>(min);
  const double steps = static_cast<double>(static_cast<std::int64_t>(code) - zero_point);
  return static_cast<float>(std::exp2(steps * delta));
}

AffineParams affine_params(double w_min, double w_max, const QuantConfig& cfg) {
  cfg.validate();
  require_finite(w_min, "w_min");
  require_finite(w_max, "w_max");
  if (w_min > w_max) {
    throw Error(ErrorCode::kInvalidArgument, "affine_params: w_min > w_max");
  }
  AffineParams p;
  p.bits = cfg.bits;
  if (w_min == w_max) {
    p.min = p.max = w_min;
    p.delta = kDegenerateDelta;
    p.zero_point = 0;
    return p;
  }
  // Widen to include zero.
  p.min = std::min(w_min, 0.0);
  p.max = std::max(w_max, 0.0);
  const double levels = static_cast<double>(cfg.max_code());
  p.delta = (p.max - p.min) / levels;
  const double z = round_half_away(-p.min / p.delta);
  p.zero_point = static_cast<std::int32_t>(std::clamp(z, 0.0, levels));
  return p;
}

std::uint8_t quantize_uniform(float w, const AffineParams& p) noexcept {
  const double x = p.degenerate() ? (static_cast<double>(w) - p.min) : static_cast<double>(w);
  return saturate(round_half_away(x / p.delta) + p.zero_point, p.max_code());
}

QuantTensor quantize_uniform(const Tensor& w, const AffineParams& p) {
  if (!(p.delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be > 0");
  if (p.bits < 2 || p.bits > 8) throw Error(ErrorCode::kInvalidArgument, "bits must be in [2, 8]");
  std::vector<std::uint8_t> codes(w.size());
  const auto src = w.data();
  for (std::size_t i = 0; i < src.size(); ++i) codes[i] = quantize_uniform(src[i], p);
  return QuantTensor(w.shape(), std::move(codes), p);
}

Tensor dequantize_uniform(const QuantTensor& q) {
  const auto* p = std::get_if<AffineParams>(&q.params());
  if (!p) throw Error(ErrorCode::kMissingQuantParams, "tensor carries no affine parameters");
  std::vector<float> out(q.size());
  const auto codes = q.codes();
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = p->decode(codes[i]);
  return Tensor(q.shape(), std::move(out));
}

LogParams log2_params(double a_min, double a_max, const QuantConfig& cfg) {
  cfg.validate();
  require_finite(a_min, "a_min");
  require_finite(a_max, "a_max");
  if (a_min > a_max) throw Error(ErrorCode::kInvalidArgument, "log2_params: a_min > a_max");
  if (a_min < 0.0 || a_max > 1.0 + kSoftmaxTolerance) {
    throw Error(ErrorCode::kNotPostSoftmax,
                "not a post-softmax activation: bounds must lie in [0, 1]");
  }
  if (a_min + cfg.epsilon <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "log2_params: a_min + epsilon must be > 0");
  }
  LogParams p;
  p.bits = cfg.bits;
  p.epsilon = cfg.epsilon;
  p.min = a_min;
  p.max = a_max;
  p.log_min = std::log2(a_min + cfg.epsilon);
  p.log_max = std::log2(a_max + cfg.epsilon);
  if (a_min == a_max) {
    p.delta = kDegenerateDelta;
    p.zero_point = 0;
    return p;
  }
  p.delta = (p.log_max - p.log_min) / static_cast<double>(cfg.max_code());
  p.zero_point = static_cast<std::int32_t>(round_half_away(-p.log_min / p.delta));
  return p;
}

std::uint8_t quantize_log2(float a, const LogParams& p) noexcept {
  double x = std::log2(static_cast<double>(a) + p.epsilon);
  if (p.degenerate()) x -= p.log_min;
  return saturate(round_half_away(x / p.delta) + p.zero_point, p.max_code());
}

QuantTensor quantize_log2(const Tensor& a, const LogParams& p) {
  if (!(p.delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be > 0");
  if (p.bits < 2 || p.bits > 8) throw Error(ErrorCode::kInvalidArgument, "bits must be in [2, 8]");
  std::vector<std::uint8_t> codes(a.size());
  const auto src = a.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float v = src[i];
    if (v < 0.0f || static_cast<double>(v) > 1.0 + kSoftmaxTolerance) {
      throw Error(ErrorCode::kNotPostSoftmax,
                  "not a post-softmax activation: " + std::to_string(v));
    }
    codes[i] = quantize_log2(v, p);
  }
  return QuantTensor(a.shape(), std::move(codes), p);
}

Tensor dequantize_log2(const QuantTensor& q) {
  const auto* p = std::get_if<LogParams>(&q.params());
  if (!p) throw Error(ErrorCode::kMissingQuantParams, "tensor carries no log2 parameters");
  std::vector<float> out(q.size());
  const auto codes = q.codes();
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = p->decode(codes[i]);
  return Tensor(q.shape(), std::move(out));
}

Tensor dequantize(const QuantTensor& q) {
  return std::holds_alternative<AffineParams>(q.params()) ? dequantize_uniform(q)
                                                          : dequantize_log2(q);
}

}  // namespace hybridq
