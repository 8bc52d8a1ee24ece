// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridq/blocks.hpp"
#include "hybridq/calibration.hpp"
#include "hybridq/package.hpp"
#include "hybridq/quantizers.hpp"

namespace hybridq {

inline constexpr int kReportVersion = 1;
inline constexpr int kHistogramBins = 64;
/// Bytes charged per quantized tensor for its parameters: delta, min and max
/// as doubles plus a 32-bit zero point.
inline constexpr std::uint64_t kParamOverheadBytes = 28;

struct PipelineConfig {
  int bits = 8;
  double epsilon = 1e-5;
  Granularity granularity = Granularity::kPerModule;
  bool allow_uncalibrated = false;

  QuantConfig quant_config() const { return {bits, epsilon}; }
};

struct Diagnostics {
  std::vector<std::uint64_t> histogram;  // kHistogramBins equal bins over [min, max]
  double min = 0.0;
  double max = 0.0;
  std::optional<double> excess_kurtosis;  // empty for constant tensors
  double mass_below_0_01 = 0.0;
};

Diagnostics distribution_report(std::span<const float> values);
Diagnostics distribution_report(const Tensor& t);

struct TensorEntry {
  std::string path;  // owning node
  std::string slot;
  std::string scheme;  // "uniform" or "none"
  std::optional<AffineParams> params;
  double mse = 0.0;
  double max_abs_err = 0.0;
  std::uint64_t fp32_bytes = 0;
  std::uint64_t quant_bytes = 0;
  std::optional<Diagnostics> diagnostics;
};

struct SiteEntry {
  std::string site;
  LogParams params;
  double mse = 0.0;          // fake-quant error over the calibration samples
  double max_abs_err = 0.0;
  std::optional<Diagnostics> diagnostics;
};

struct QuantReport {
  PipelineConfig config;
  BlockPartition partition;
  std::vector<TensorEntry> tensors;
  std::vector<SiteEntry> sites;
  std::uint64_t fp32_bytes = 0;
  std::uint64_t quant_bytes = 0;
  double compression_ratio = 1.0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const Diagnostics& d);
nlohmann::json to_json(const QuantReport& r);

struct QuantizeResult {
  ModelPackage package;
  QuantReport report;
};

/// Uniform-quantizes the weights of every cnn entry and annotates every
/// Softmax beneath a transformer entry with log2 parameters from `traces`.
/// Measured error metrics and diagnostics are stored in the output's
/// metadata so derive_report() can rebuild the same report later.
QuantizeResult quantize_model(const ModelPackage& pkg, const TracePackage* traces,
                              const PipelineConfig& cfg);

/// Rebuilds the report of a package produced by quantize_model().
QuantReport derive_report(const ModelPackage& quantized);

/// Softmax nodes that lie under a transformer entry, as site ids.
std::vector<std::string> softmax_sites(const ModelPackage& pkg, const BlockPartition& part);

struct EvalSummary {
  std::size_t n_inputs = 0;
  double cosine_similarity = 1.0;  // over all outputs concatenated
  double min_cosine_similarity = 1.0;
  double max_abs_diff = 0.0;
  double top1_agreement = 1.0;
  double max_softmax_row_error = 0.0;  // |row sum - 1| over fp32 captures
};

EvalSummary evaluate(const ModelPackage& fp32, const ModelPackage& quantized,
                     std::span<const Tensor> inputs);

nlohmann::json to_json(const EvalSummary& s);

}  // namespace hybridq
