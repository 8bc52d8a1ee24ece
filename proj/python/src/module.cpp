// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "hybridq/blocks.hpp"
#include "hybridq/error.hpp"
#include "hybridq/executor.hpp"
#include "hybridq/fixtures.hpp"
#include "hybridq/package.hpp"
#include "hybridq/pipeline.hpp"
#include "hybridq/quantizers.hpp"

namespace py = pybind11;
using namespace hybridq;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using CodeArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

Shape shape_of(const py::array& a) {
  std::vector<std::int64_t> dims(a.shape(), a.shape() + a.ndim());
  return Shape(std::move(dims));
}

Tensor to_tensor(const FloatArray& a) {
  return Tensor(shape_of(a), std::vector<float>(a.data(), a.data() + a.size()));
}

std::vector<py::ssize_t> dims_of(const Shape& s) { return {s.dims().begin(), s.dims().end()}; }

FloatArray to_array(const Tensor& t) {
  FloatArray out(dims_of(t.shape()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

CodeArray to_array(const QuantTensor& q) {
  CodeArray out(dims_of(q.shape()));
  std::copy(q.codes().begin(), q.codes().end(), out.mutable_data());
  return out;
}

QuantTensor to_quant(const CodeArray& codes, const py::dict& params) {
  return QuantTensor(shape_of(codes), std::vector<std::uint8_t>(codes.data(), codes.data() + codes.size()),
                     params_from_json(from_py(params)));
}

py::tuple quantize_with(const FloatArray& values, const QuantParams& p) {
  const Tensor t = to_tensor(values);
  const QuantTensor q = std::holds_alternative<AffineParams>(p) ? quantize_uniform(t, std::get<AffineParams>(p))
                                                                 : quantize_log2(t, std::get<LogParams>(p));
  return py::make_tuple(to_array(q), to_py(params_to_json(p)));
}

Range bounds(const FloatArray& values, std::optional<double> lo, std::optional<double> hi) {
  Range r{};
  if (!lo || !hi) r = min_max(std::span<const float>(values.data(), static_cast<std::size_t>(values.size())));
  return {lo ? static_cast<float>(*lo) : r.min, hi ? static_cast<float>(*hi) : r.max};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Post-training quantization for hybrid CNN/transformer models";

  static py::exception<Error> error_type(m, "HybridqError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::tuple args = py::make_tuple(e.what(), std::string(to_string(e.code())));
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  m.def(
      "affine_params",
      [](double w_min, double w_max, int bits) {
        return to_py(params_to_json(affine_params(w_min, w_max, {bits, 1e-5})));
      },
      py::arg("w_min"), py::arg("w_max"), py::arg("bits") = 8);

  m.def(
      "log2_params",
      [](double a_min, double a_max, int bits, double epsilon) {
        return to_py(params_to_json(log2_params(a_min, a_max, {bits, epsilon})));
      },
      py::arg("a_min"), py::arg("a_max"), py::arg("bits") = 8, py::arg("epsilon") = 1e-5);

  m.def(
      "quantize_uniform",
      [](const FloatArray& w, std::optional<double> w_min, std::optional<double> w_max, int bits) {
        const Range r = bounds(w, w_min, w_max);
        return quantize_with(w, affine_params(r.min, r.max, {bits, 1e-5}));
      },
      py::arg("w"), py::arg("w_min") = py::none(), py::arg("w_max") = py::none(), py::arg("bits") = 8,
      "Returns (codes, params). Bounds default to the array's min and max.");

  m.def(
      "quantize_log2",
      [](const FloatArray& a, std::optional<double> a_min, std::optional<double> a_max, int bits,
         double epsilon) {
        const Range r = bounds(a, a_min, a_max);
        return quantize_with(a, log2_params(r.min, r.max, {bits, epsilon}));
      },
      py::arg("a"), py::arg("a_min") = py::none(), py::arg("a_max") = py::none(), py::arg("bits") = 8,
      py::arg("epsilon") = 1e-5, "Returns (codes, params). Bounds default to the array's min and max.");

  m.def(
      "dequantize",
      [](const CodeArray& codes, const py::dict& params) { return to_array(dequantize(to_quant(codes, params))); },
      py::arg("codes"), py::arg("params"));

  m.def(
      "identify_blocks",
      [](const std::filesystem::path& model_dir) {
        const auto scan = scan_blocks(load_package(model_dir).root);
        auto j = to_json(scan.partition);
        j["visits"] = scan.visits;
        return to_py(j);
      },
      py::arg("model_dir"));

  m.def(
      "write_fixture",
      [](const std::string& kind, const std::filesystem::path& out,
         std::optional<std::filesystem::path> inputs, std::size_t count, std::uint64_t seed) {
        ModelPackage pkg;
        if (kind == "toy-hybrid") {
          pkg = fixtures::toy_hybrid();
        } else if (kind == "conv-heavy") {
          pkg = fixtures::conv_heavy();
        } else if (kind == "block-example") {
          pkg = fixtures::block_example();
        } else {
          throw Error(ErrorCode::kInvalidArgument, "unknown fixture '" + kind + "'");
        }
        save_package(pkg, out);
        if (inputs) write_inputs(*inputs, fixtures::random_inputs(count, seed));
      },
      py::arg("kind"), py::arg("out"), py::arg("inputs") = py::none(), py::arg("count") = 32,
      py::arg("seed") = 0);

  m.def(
      "trace",
      [](const std::filesystem::path& model_dir, const std::filesystem::path& inputs,
         const std::filesystem::path& out) {
        const auto traces = record_traces(load_package(model_dir), read_inputs(inputs));
        save_traces(traces, out);
        py::dict d;
        d["n_samples"] = traces.n_samples;
        py::list sites;
        for (const auto& [site, recs] : traces.sites) sites.append(site);
        d["sites"] = sites;
        return d;
      },
      py::arg("model_dir"), py::arg("inputs"), py::arg("out"));

  m.def(
      "quantize_model",
      [](const std::filesystem::path& model_dir, const std::filesystem::path& out,
         std::optional<std::filesystem::path> traces_dir, int bits, double epsilon,
         const std::string& granularity, bool allow_uncalibrated) {
        PipelineConfig cfg;
        cfg.bits = bits;
        cfg.epsilon = epsilon;
        cfg.granularity = parse_granularity(granularity);
        cfg.allow_uncalibrated = allow_uncalibrated;
        const auto pkg = load_package(model_dir);
        std::optional<TracePackage> traces;
        if (traces_dir) traces = load_traces(*traces_dir);
        const auto result = quantize_model(pkg, traces ? &*traces : nullptr, cfg);
        save_package(result.package, out);
        return to_py(to_json(result.report));
      },
      py::arg("model_dir"), py::arg("out"), py::arg("traces") = py::none(), py::arg("bits") = 8,
      py::arg("epsilon") = 1e-5, py::arg("granularity") = "per-module", py::arg("allow_uncalibrated") = false,
      "Quantizes a package directory into `out` and returns the report.");

  m.def(
      "report",
      [](const std::filesystem::path& quant_dir) { return to_py(to_json(derive_report(load_package(quant_dir)))); },
      py::arg("quant_dir"));

  m.def(
      "evaluate",
      [](const std::filesystem::path& model_dir, const std::filesystem::path& quant_dir,
         const std::filesystem::path& inputs) {
        return to_py(to_json(evaluate(load_package(model_dir), load_package(quant_dir), read_inputs(inputs))));
      },
      py::arg("model_dir"), py::arg("quant_dir"), py::arg("inputs"));

  m.def(
      "execute",
      [](const std::filesystem::path& model_dir, const FloatArray& input,
         std::optional<std::filesystem::path> quant_dir) {
        const auto pkg = load_package(model_dir);
        std::optional<ModelPackage> quant;
        if (quant_dir) quant = load_package(*quant_dir);
        const auto mode = quant ? ExecMode::kSimulatedQuant : ExecMode::kFp32;
        const auto r = execute(pkg, to_tensor(input), mode, quant ? &*quant : nullptr);
        py::dict captured;
        for (const auto& [site, t] : r.captured_softmax) captured[py::str(site)] = to_array(t);
        return py::make_tuple(to_array(r.output), captured);
      },
      py::arg("model_dir"), py::arg("input"), py::arg("quant_dir") = py::none(),
      "Runs one input; simulated-quant mode when `quant_dir` is given. Returns (output, softmax captures).");
}
