// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hybridq/blocks.hpp"
#include "hybridq/error.hpp"
#include "hybridq/executor.hpp"
#include "hybridq/package.hpp"
#include "hybridq/pipeline.hpp"

namespace {

using namespace hybridq;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

int run_inspect(const std::string& model_dir, bool as_json) {
  const auto pkg = load_package(model_dir);
  const auto scan = scan_blocks(pkg.root);
  if (as_json) {
    std::cout << to_json(scan.partition).dump() << '\n';
    return 0;
  }
  std::cout << "nodes visited: " << scan.visits << '\n';
  std::cout << "cnn (" << scan.partition.cnn.size() << "):\n";
  for (const auto& p : scan.partition.cnn) std::cout << "  " << p << '\n';
  std::cout << "transformer (" << scan.partition.transformer.size() << "):\n";
  for (const auto& p : scan.partition.transformer) std::cout << "  " << p << '\n';
  return 0;
}

int run_trace(const std::string& model_dir, const std::string& inputs, const std::string& out) {
  const auto pkg = load_package(model_dir);
  const auto samples = read_inputs(inputs);
  const auto traces = record_traces(pkg, samples);
  save_traces(traces, out);
  std::cerr << "recorded " << traces.sites.size() << " site(s) x " << traces.n_samples
            << " sample(s) to " << out << '\n';
  return 0;
}

int run_quantize(const std::string& model_dir, const std::optional<std::string>& trace_dir,
                 const std::string& out, const PipelineConfig& cfg,
                 const std::optional<std::string>& report_path) {
  const auto pkg = load_package(model_dir);
  std::optional<TracePackage> traces;
  if (trace_dir) traces = load_traces(*trace_dir);
  const auto result = quantize_model(pkg, traces ? &*traces : nullptr, cfg);
  save_package(result.package, out);
  const std::string report = canonical_dump(to_json(result.report));
  if (report_path) write_text(*report_path, report);
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "compression ratio " << result.report.compression_ratio << '\n';
  return 0;
}

int run_report(const std::string& quant_dir) {
  std::cout << canonical_dump(to_json(derive_report(load_package(quant_dir))));
  return 0;
}

int run_eval(const std::string& model_dir, const std::string& quant_dir, const std::string& inputs) {
  const auto samples = read_inputs(inputs);
  const auto fp32 = load_package(model_dir);
  const auto quant = load_package(quant_dir);
  std::cout << canonical_dump(to_json(evaluate(fp32, quant, samples)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-training quantization for hybrid CNN/transformer models"};
  app.require_subcommand(1);

  std::string model_dir, quant_dir, inputs, out;
  bool as_json = false;
  auto* inspect = app.add_subcommand("inspect", "Print the cnn/transformer block partition");
  inspect->add_option("model_dir", model_dir)->required();
  inspect->add_flag("--json", as_json, "Emit JSON");

  auto* trace = app.add_subcommand("trace", "Record post-softmax traces with the toy executor");
  trace->add_option("model_dir", model_dir)->required();
  trace->add_option("--inputs", inputs, "Executor input file")->required();
  trace->add_option("--out", out, "Output trace directory")->required();

  PipelineConfig cfg;
  std::optional<std::string> trace_dir, report_path;
  std::string granularity = "per-module";
  auto* quantize = app.add_subcommand("quantize", "Quantize a model package");
  quantize->add_option("model_dir", model_dir)->required();
  quantize->add_option("--traces", trace_dir, "Trace directory from `trace`");
  quantize->add_option("--out", out, "Output package directory")->required();
  quantize->add_option("--bits", cfg.bits, "Bit width")->capture_default_str();
  quantize->add_option("--epsilon", cfg.epsilon, "log2 stabilizer")->capture_default_str();
  quantize->add_option("--granularity", granularity, "per-module | per-group")->capture_default_str();
  quantize->add_option("--report", report_path, "Write the report JSON here");
  quantize->add_flag("--allow-uncalibrated", cfg.allow_uncalibrated,
                     "Leave softmax sites without traces unquantized");

  auto* report = app.add_subcommand("report", "Re-derive the report of a quantized package");
  report->add_option("quant_dir", quant_dir)->required();

  auto* eval = app.add_subcommand("eval", "Compare fp32 and simulated-quant execution");
  eval->add_option("model_dir", model_dir)->required();
  eval->add_option("quant_dir", quant_dir)->required();
  eval->add_option("--inputs", inputs, "Executor input file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect) return run_inspect(model_dir, as_json);
    if (*trace) return run_trace(model_dir, inputs, out);
    if (*quantize) {
      cfg.granularity = parse_granularity(granularity);
      return run_quantize(model_dir, trace_dir, out, cfg, report_path);
    }
    if (*report) return run_report(quant_dir);
    if (*eval) return run_eval(model_dir, quant_dir, inputs);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
