// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybridq/error.hpp"

namespace hybridq {

Shape::Shape(std::initializer_list<std::int64_t> dims)
    : Shape(std::vector<std::int64_t>(dims)) {}

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  for (auto d : dims_) {
    if (d < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "shape dimension must be >= 1, got " + std::to_string(d));
    }
  }
}

std::size_t Shape::element_count() const noexcept {
  std::size_t n = 1;
  for (auto d : dims_) n *= static_cast<std::size_t>(d);
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ", ";
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.element_count()) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape_.str());
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite value");
  }
}

int bits_of(const QuantParams& params) {
  return std::visit([](const auto& p) { return p.bits; }, params);
}

QuantTensor::QuantTensor(Shape shape, std::vector<std::uint8_t> codes,
                         QuantParams params)
    : shape_(std::move(shape)), codes_(std::move(codes)), params_(std::move(params)) {
  if (codes_.size() != shape_.element_count()) {
    throw Error(ErrorCode::kShapeMismatch,
                "code count " + std::to_string(codes_.size()) +
                    " does not match shape " + shape_.str());
  }
  const int bits = bits_of(params_);
  if (bits < 2 || bits > 8) {
    throw Error(ErrorCode::kInvalidArgument, "bit width must be in [2, 8]");
  }
  const unsigned max_code = (1u << bits) - 1u;
  for (auto c : codes_) {
    if (c > max_code) {
      throw Error(ErrorCode::kCodeOutOfRange,
                  "code " + std::to_string(c) + " exceeds " + std::to_string(max_code));
    }
  }
}

Range min_max(std::span<const float> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyTensor, "empty tensor");
  float lo = values[0];
  float hi = values[0];
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

Range min_max(const Tensor& t) { return min_max(t.data()); }

ErrorMetrics error_metrics(const Tensor& original, const Tensor& reconstructed) {
  if (original.shape() != reconstructed.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "error_metrics: shape " + original.shape().str() + " vs " +
                    reconstructed.shape().str());
  }
  const auto a = original.data();
  const auto b = reconstructed.data();
  double sq = 0.0, max_abs = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    const double d = x - y;
    sq += d * d;
    max_abs = std::max(max_abs, std::abs(d));
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  ErrorMetrics m;
  m.mse = sq / static_cast<double>(a.size());
  m.max_abs_err = max_abs;
  if (na == 0.0 && nb == 0.0) {
    m.cosine_sim = 1.0;
  } else if (na == 0.0 || nb == 0.0) {
    m.cosine_sim = 0.0;
  } else {
    m.cosine_sim = dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return m;
}

}  // namespace hybridq
