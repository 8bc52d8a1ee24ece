// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hybridq/quant_params.hpp"

namespace hybridq {

/// Ordered list of positive dimensions. Rank 0 is a scalar (one element).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims);
  explicit Shape(std::vector<std::int64_t> dims);

  const std::vector<std::int64_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::int64_t operator[](std::size_t i) const { return dims_.at(i); }
  std::size_t element_count() const noexcept;

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::int64_t> dims_;
};

/// Dense row-major fp32 tensor. Rejects NaN/Inf at construction and is
/// immutable afterwards.
class Tensor {
 public:
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::span<const float> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }
  float operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

using QuantParams = std::variant<AffineParams, LogParams>;

int bits_of(const QuantParams& params);

/// b-bit codes, one per byte, plus the parameters that decode them.
class QuantTensor {
 public:
  QuantTensor(Shape shape, std::vector<std::uint8_t> codes, QuantParams params);

  const Shape& shape() const noexcept { return shape_; }
  std::span<const std::uint8_t> codes() const noexcept { return codes_; }
  const QuantParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return codes_.size(); }

 private:
  Shape shape_;
  std::vector<std::uint8_t> codes_;
  QuantParams params_;
};

struct Range {
  float min = 0.0f;
  float max = 0.0f;
  friend bool operator==(const Range&, const Range&) = default;
};

Range min_max(std::span<const float> values);
Range min_max(const Tensor& t);

struct ErrorMetrics {
  double mse = 0.0;
  double max_abs_err = 0.0;
  double cosine_sim = 1.0;
};

ErrorMetrics error_metrics(const Tensor& original, const Tensor& reconstructed);

}  // namespace hybridq
