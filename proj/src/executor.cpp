// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/executor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hybridq/error.hpp"
#include "hybridq/quantizers.hpp"

namespace hybridq {
namespace {

struct Activation {
  std::vector<std::int64_t> dims;
  std::vector<float> data;
};

std::string dims_str(const std::vector<std::int64_t>& d) { return Shape(d).str(); }

[[noreturn]] void shape_error(const ExecStep& step, const std::string& detail) {
  throw Error(ErrorCode::kShapeMismatch, step.path + " (" + step.node->kind.str() + "): " + detail);
}

void collect(const ModuleNode& node, const std::string& path, std::vector<ExecStep>& steps) {
  switch (node.kind.tag()) {
    case LayerKind::kContainer:
      for (const auto& c : node.children) collect(c, join_path(path, c.name), steps);
      return;
    case LayerKind::kConv2d:
    case LayerKind::kLinear:
    case LayerKind::kReLU:
    case LayerKind::kSoftmax:
    case LayerKind::kFlatten:
      if (!node.children.empty()) {
        throw Error(ErrorCode::kNotExecutable, path + ": leaf layer with children");
      }
      steps.push_back({&node, path});
      return;
    default:
      throw Error(ErrorCode::kNotExecutable,
                  path + ": kind " + node.kind.str() + " is not executable");
  }
}

// u8 weights decode through their params; f32 weights load as-is.
Tensor load_param(const ModelPackage& pkg, const TensorRecord& rec) {
  return rec.dtype == DType::kU8 ? dequantize(pkg.read_quant(rec)) : pkg.read_f32(rec);
}

Activation conv2d(const ModelPackage& pkg, const ExecStep& step, const Activation& in) {
  const Tensor w = load_param(pkg, *step.node->tensor("weight"));
  const auto& wd = w.shape().dims();
  if (wd.size() != 4) shape_error(step, "weight must be [O, C, KH, KW], got " + w.shape().str());
  if (in.dims.size() != 3 || in.dims[0] != wd[1]) {
    shape_error(step, "input " + dims_str(in.dims) + " incompatible with weight " + w.shape().str());
  }
  const std::int64_t stride = step.node->attr("stride", 1);
  const std::int64_t pad = step.node->attr("padding", 0);
  if (stride < 1 || pad < 0) shape_error(step, "stride must be >= 1 and padding >= 0");
  const std::int64_t O = wd[0], C = wd[1], KH = wd[2], KW = wd[3];
  const std::int64_t H = in.dims[1], W = in.dims[2];
  const std::int64_t OH = (H + 2 * pad - KH) / stride + 1;
  const std::int64_t OW = (W + 2 * pad - KW) / stride + 1;
  if (H + 2 * pad < KH || W + 2 * pad < KW) shape_error(step, "kernel larger than padded input");

  std::optional<Tensor> bias;
  if (const auto* b = step.node->tensor("bias")) {
    bias = load_param(pkg, *b);
    if (bias->size() != static_cast<std::size_t>(O)) shape_error(step, "bias length != out channels");
  }
  Activation out{{O, OH, OW}, std::vector<float>(static_cast<std::size_t>(O * OH * OW))};
  const auto wv = w.data();
  for (std::int64_t o = 0; o < O; ++o) {
    for (std::int64_t y = 0; y < OH; ++y) {
      for (std::int64_t x = 0; x < OW; ++x) {
        float acc = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0f;
        for (std::int64_t c = 0; c < C; ++c) {
          for (std::int64_t ky = 0; ky < KH; ++ky) {
            const std::int64_t iy = y * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            for (std::int64_t kx = 0; kx < KW; ++kx) {
              const std::int64_t ix = x * stride + kx - pad;
              if (ix < 0 || ix >= W) continue;
              acc += wv[static_cast<std::size_t>(((o * C + c) * KH + ky) * KW + kx)] *
                     in.data[static_cast<std::size_t>((c * H + iy) * W + ix)];
            }
          }
        }
        out.data[static_cast<std::size_t>((o * OH + y) * OW + x)] = acc;
      }
    }
  }
  return out;
}

Activation linear(const ModelPackage& pkg, const ExecStep& step, const Activation& in) {
  const Tensor w = load_param(pkg, *step.node->tensor("weight"));
  const auto& wd = w.shape().dims();
  if (wd.size() != 2) shape_error(step, "weight must be [O, I], got " + w.shape().str());
  if (in.dims.empty() || in.dims.back() != wd[1]) {
    shape_error(step, "input " + dims_str(in.dims) + " incompatible with weight " + w.shape().str());
  }
  const std::int64_t O = wd[0], I = wd[1];
  std::optional<Tensor> bias;
  if (const auto* b = step.node->tensor("bias")) {
    bias = load_param(pkg, *b);
    if (bias->size() != static_cast<std::size_t>(O)) shape_error(step, "bias length != out features");
  }
  const std::size_t rows = in.data.size() / static_cast<std::size_t>(I);
  Activation out{in.dims, std::vector<float>(rows * static_cast<std::size_t>(O))};
  out.dims.back() = O;
  const auto wv = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = in.data.data() + r * static_cast<std::size_t>(I);
    for (std::int64_t o = 0; o < O; ++o) {
      float acc = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0f;
      const float* wr = wv.data() + o * I;
      for (std::int64_t i = 0; i < I; ++i) acc += wr[i] * x[i];
      out.data[r * static_cast<std::size_t>(O) + static_cast<std::size_t>(o)] = acc;
    }
  }
  return out;
}

void softmax_rows(Activation& a) {
  const std::size_t width = a.dims.empty() ? 1 : static_cast<std::size_t>(a.dims.back());
  for (std::size_t r = 0; r < a.data.size(); r += width) {
    float* row = a.data.data() + r;
    const float peak = *std::max_element(row, row + width);
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      row[i] = std::exp(row[i] - peak);
      sum += row[i];
    }
    for (std::size_t i = 0; i < width; ++i) row[i] = static_cast<float>(row[i] / sum);
  }
}

Activation flatten(const ExecStep& step, Activation a) {
  const auto start = step.node->attr("start_dim", 0);
  if (start < 0 || start >= static_cast<std::int64_t>(std::max<std::size_t>(a.dims.size(), 1))) {
    shape_error(step, "start_dim out of range for input " + dims_str(a.dims));
  }
  std::vector<std::int64_t> dims(a.dims.begin(), a.dims.begin() + start);
  std::int64_t merged = 1;
  for (auto it = a.dims.begin() + start; it != a.dims.end(); ++it) merged *= *it;
  dims.push_back(merged);
  a.dims = std::move(dims);
  return a;
}

}  // namespace

ExecPlan ExecPlan::build(const ModuleNode& root) {
  ExecPlan plan;
  collect(root, root.name, plan.steps_);
  return plan;
}

ExecResult execute(const ModelPackage& pkg, const Tensor& input, ExecMode mode,
                   const ModelPackage* quant) {
  if (mode == ExecMode::kSimulatedQuant && !quant) {
    throw Error(ErrorCode::kMissingQuantParams, "simulated-quant execution needs a quantized package");
  }
  const ModelPackage& graph = mode == ExecMode::kSimulatedQuant ? *quant : pkg;
  const ExecPlan plan = ExecPlan::build(graph.root);

  Activation act{input.shape().dims(), std::vector<float>(input.data().begin(), input.data().end())};
  std::map<std::string, Tensor> captured;
  for (const auto& step : plan.steps()) {
    switch (step.node->kind.tag()) {
      case LayerKind::kConv2d: act = conv2d(graph, step, act); break;
      case LayerKind::kLinear: act = linear(graph, step, act); break;
      case LayerKind::kReLU:
        for (auto& v : act.data) v = std::max(v, 0.0f);
        break;
      case LayerKind::kFlatten: act = flatten(step, std::move(act)); break;
      case LayerKind::kSoftmax: {
        softmax_rows(act);
        Tensor probs(Shape(act.dims), act.data);
        if (mode == ExecMode::kSimulatedQuant && step.node->quant_act) {
          probs = dequantize_log2(quantize_log2(probs, *step.node->quant_act));
          act.data.assign(probs.data().begin(), probs.data().end());
        }
        captured.insert_or_assign(site_id(step.path), std::move(probs));
        break;
      }
      default: break;  // unreachable: ExecPlan rejects other kinds
    }
  }
  return {Tensor(Shape(act.dims), std::move(act.data)), std::move(captured)};
}

TracePackage record_traces(const ModelPackage& pkg, std::span<const Tensor> inputs) {
  TraceBuilder builder;
  for (const auto& in : inputs) {
    const auto result = execute(pkg, in, ExecMode::kFp32);
    for (const auto& [site, t] : result.captured_softmax) builder.add(site, t);
  }
  return std::move(builder).finish(static_cast<int>(inputs.size()));
}

std::vector<Tensor> read_inputs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing input file: " + path.string());
  std::string header;
  std::getline(in, header);
  nlohmann::json h;
  std::size_t count = 0;
  Shape shape;
  try {
    h = nlohmann::json::parse(header);
    count = h.at("count").get<std::size_t>();
    shape = Shape(h.at("shape").get<std::vector<std::int64_t>>());
    if (h.value("dtype", std::string("f32")) != "f32") {
      throw Error(ErrorCode::kMalformedJson, "input file dtype must be f32: " + path.string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, "bad input header in " + path.string() + ": " + e.what());
  }
  const std::size_t n = shape.element_count();
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> data(n);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) {
      throw Error(ErrorCode::kRecordOutOfRange,
                  "input file truncated at sample " + std::to_string(i) + ": " + path.string());
    }
    out.emplace_back(shape, std::move(data));
  }
  return out;
}

void write_inputs(const std::filesystem::path& path, std::span<const Tensor> inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no inputs to write");
  const Shape& shape = inputs.front().shape();
  nlohmann::json h = {{"count", inputs.size()}, {"dtype", "f32"}, {"shape", shape.dims()}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << h.dump() << '\n';
  for (const auto& t : inputs) {
    if (t.shape() != shape) throw Error(ErrorCode::kShapeMismatch, "inputs must share one shape");
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace hybridq
