// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Minimal single-sample executor for sequential module trees, used to record
// calibration traces and compare fp32 against simulated quantization.
//
// Executable kinds and their contracts (no batch dimension):
//   Conv2d   input [C, H, W], weight [O, C, KH, KW], bias [O]; attrs stride, padding
//   Linear   input [..., I], weight [O, I], bias [O]; applied to the last axis
//   ReLU     elementwise
//   Softmax  over the last axis
//   Flatten  merges dims from attr start_dim (default 0) onward
// Containers run their children in declaration order. Any other kind is
// rejected.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hybridq/package.hpp"
#include "hybridq/tensor.hpp"

namespace hybridq {

enum class ExecMode { kFp32, kSimulatedQuant };

struct ExecStep {
  const ModuleNode* node = nullptr;
  std::string path;
};

/// Flattened leaf steps of a package, in execution order.
class ExecPlan {
 public:
  /// Throws kNotExecutable if the tree holds a non-executable kind.
  static ExecPlan build(const ModuleNode& root);

  const std::vector<ExecStep>& steps() const noexcept { return steps_; }

 private:
  std::vector<ExecStep> steps_;
};

struct ExecResult {
  Tensor output;
  std::map<std::string, Tensor> captured_softmax;  // site id -> post-softmax tensor
};

/// Runs `input` through `pkg`. In simulated-quant mode the graph and weights
/// come from `quant`: u8 weights are dequantized before use and every Softmax
/// carrying quant_act is fake-quantized in place. Captured tensors are taken
/// after fake quantization in that mode.
ExecResult execute(const ModelPackage& pkg, const Tensor& input, ExecMode mode,
                   const ModelPackage* quant = nullptr);

/// fp32 execution of every input; one trace sample per input per site.
TracePackage record_traces(const ModelPackage& pkg, std::span<const Tensor> inputs);

// Executor input files: one JSON header line {"count", "dtype": "f32", "shape"}
// terminated by '\n', followed by count * prod(shape) little-endian f32 values.
std::vector<Tensor> read_inputs(const std::filesystem::path& path);
void write_inputs(const std::filesystem::path& path, std::span<const Tensor> inputs);

}  // namespace hybridq
