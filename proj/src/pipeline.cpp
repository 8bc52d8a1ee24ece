// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hybridq/error.hpp"
#include "hybridq/executor.hpp"

namespace hybridq {

using nlohmann::json;

namespace {

bool is_quantized(const ModelPackage& pkg) {
  bool found = false;
  for_each_node(pkg.root, [&](const ModuleNode& n, const std::string&) {
    if (n.quant_act) found = true;
    for (const auto& [slot, rec] : n.tensors) {
      if (rec.dtype == DType::kU8 || rec.quant) found = true;
    }
  });
  return found;
}

void walk_mutable(ModuleNode& n, const std::string& path,
                  const std::function<void(ModuleNode&, const std::string&)>& fn) {
  fn(n, path);
  for (auto& c : n.children) walk_mutable(c, join_path(path, c.name), fn);
}

Diagnostics diagnostics_from_json(const json& j) {
  Diagnostics d;
  d.histogram = j.at("histogram").get<std::vector<std::uint64_t>>();
  d.min = j.at("min").get<double>();
  d.max = j.at("max").get<double>();
  if (!j.at("excess_kurtosis").is_null()) d.excess_kurtosis = j.at("excess_kurtosis").get<double>();
  d.mass_below_0_01 = j.at("mass_below_0.01").get<double>();
  return d;
}

json config_to_json(const PipelineConfig& c) {
  return {{"bits", c.bits},
          {"epsilon", c.epsilon},
          {"granularity", std::string(to_string(c.granularity))},
          {"allow_uncalibrated", c.allow_uncalibrated}};
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  c.bits = j.at("bits").get<int>();
  c.epsilon = j.at("epsilon").get<double>();
  c.granularity = parse_granularity(j.at("granularity").get<std::string>());
  c.allow_uncalibrated = j.at("allow_uncalibrated").get<bool>();
  return c;
}

json measured(const ErrorMetrics& m, const Diagnostics& d) {
  return {{"mse", m.mse}, {"max_abs_err", m.max_abs_err}, {"diagnostics", to_json(d)}};
}

Tensor concat(const std::vector<Tensor>& parts) {
  std::vector<float> all;
  for (const auto& t : parts) all.insert(all.end(), t.data().begin(), t.data().end());
  Shape shape{static_cast<std::int64_t>(all.size())};
  return Tensor(std::move(shape), std::move(all));
}

std::size_t argmax(std::span<const float> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Diagnostics distribution_report(std::span<const float> values) {
  const Range r = min_max(values);
  Diagnostics d;
  d.min = r.min;
  d.max = r.max;
  d.histogram.assign(kHistogramBins, 0);
  const double width = d.max - d.min;
  double sum = 0.0;
  std::uint64_t below = 0;
  for (float v : values) {
    std::size_t bin = 0;
    if (width > 0.0) {
      bin = static_cast<std::size_t>((v - d.min) / width * kHistogramBins);
      bin = std::min<std::size_t>(bin, kHistogramBins - 1);
    }
    ++d.histogram[bin];
    sum += v;
    if (v < 0.01f) ++below;
  }
  const double n = static_cast<double>(values.size());
  d.mass_below_0_01 = static_cast<double>(below) / n;
  const double mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (float v : values) {
    const double c = v - mean;
    const double c2 = c * c;
    m2 += c2;
    m4 += c2 * c2;
  }
  m2 /= n;
  m4 /= n;
  if (m2 > 0.0) d.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return d;
}

Diagnostics distribution_report(const Tensor& t) { return distribution_report(t.data()); }

json to_json(const Diagnostics& d) {
  return {{"histogram", d.histogram},
          {"min", d.min},
          {"max", d.max},
          {"excess_kurtosis", d.excess_kurtosis ? json(*d.excess_kurtosis) : json(nullptr)},
          {"mass_below_0.01", d.mass_below_0_01}};
}

json to_json(const QuantReport& r) {
  json j;
  j["report_version"] = kReportVersion;
  j["config"] = config_to_json(r.config);
  j["partition"] = to_json(r.partition);
  j["tensors"] = json::array();
  for (const auto& e : r.tensors) {
    json t = {{"path", e.path},
              {"slot", e.slot},
              {"scheme", e.scheme},
              {"mse", e.mse},
              {"max_abs_err", e.max_abs_err},
              {"fp32_bytes", e.fp32_bytes},
              {"quant_bytes", e.quant_bytes}};
    t["params"] = e.params ? params_to_json(*e.params) : json(nullptr);
    t["diagnostics"] = e.diagnostics ? to_json(*e.diagnostics) : json(nullptr);
    j["tensors"].push_back(std::move(t));
  }
  j["sites"] = json::array();
  for (const auto& s : r.sites) {
    j["sites"].push_back({{"site", s.site},
                          {"params", params_to_json(s.params)},
                          {"mse", s.mse},
                          {"max_abs_err", s.max_abs_err},
                          {"diagnostics", s.diagnostics ? to_json(*s.diagnostics) : json(nullptr)}});
  }
  j["totals"] = {{"fp32_bytes", r.fp32_bytes},
                 {"quant_bytes", r.quant_bytes},
                 {"compression_ratio", r.compression_ratio}};
  j["warnings"] = r.warnings;
  return j;
}

std::vector<std::string> softmax_sites(const ModelPackage& pkg, const BlockPartition& part) {
  std::vector<std::string> sites;
  for_each_node(pkg.root, [&](const ModuleNode& n, const std::string& path) {
    if (n.kind.tag() == LayerKind::kSoftmax && under_transformer(part, path)) {
      sites.push_back(site_id(path));
    }
  });
  return sites;
}

QuantizeResult quantize_model(const ModelPackage& pkg, const TracePackage* traces,
                              const PipelineConfig& cfg) {
  if (is_quantized(pkg)) {
    throw Error(ErrorCode::kAlreadyQuantized, "package is already quantized");
  }
  const QuantConfig qcfg = cfg.quant_config();
  qcfg.validate();

  const BlockPartition part = identify_blocks(pkg);
  const auto weight_bounds = calibrate_weights(pkg, part, cfg.granularity);
  const auto required = softmax_sites(pkg, part);

  std::map<std::string, Range> act_bounds;
  std::vector<std::string> ignored;
  if (traces && !traces->sites.empty()) {
    TracePackage relevant;
    relevant.n_samples = traces->n_samples;
    for (const auto& [site, recs] : traces->sites) {
      const ModuleNode* n = find_node(pkg.root, *site_node_path(site));
      if (!n || n->kind.tag() != LayerKind::kSoftmax) {
        throw Error(ErrorCode::kPathNotFound, "trace site does not name a Softmax node: " + site);
      }
      if (under_transformer(part, *site_node_path(site))) {
        relevant.sites.emplace(site, recs);
      } else {
        ignored.push_back(site);
      }
    }
    if (!relevant.sites.empty()) {
      relevant.blob = traces->blob;
      act_bounds = calibrate_activations(relevant, part);
    }
  }
  std::vector<std::string> skipped;
  for (const auto& site : required) {
    if (act_bounds.count(site)) continue;
    if (!cfg.allow_uncalibrated) {
      throw Error(ErrorCode::kUncalibrated, "uncalibrated softmax site: " + site +
                                                " (pass --allow-uncalibrated to skip it)");
    }
    skipped.push_back(site);
  }

  if (weight_bounds.empty() && act_bounds.empty()) {
    QuantizeResult res{pkg, derive_report(pkg)};
    res.report.config = cfg;
    for (const auto& site : skipped) {
      res.report.warnings.push_back("uncalibrated softmax site skipped: " + site);
    }
    for (const auto& site : ignored) {
      res.report.warnings.push_back("softmax site outside transformer blocks ignored: " + site);
    }
    return res;
  }

  ModelPackage out;
  out.format_version = pkg.format_version;
  out.root = pkg.root;
  out.metadata = pkg.metadata;
  json measurements = {{"tensors", json::object()}, {"sites", json::object()}};
  BlobWriter blob;

  walk_mutable(out.root, out.root.name, [&](ModuleNode& node, const std::string& path) {
    for (auto& [slot, rec] : node.tensors) {
      auto wb = weight_bounds.find(path);
      if (slot != "weight" || wb == weight_bounds.end()) {
        rec = blob.copy_from(pkg.blob, rec);
        continue;
      }
      const Tensor w = pkg.read_f32(rec);
      try {
        const AffineParams p = affine_params(wb->second.min, wb->second.max, qcfg);
        const QuantTensor q = quantize_uniform(w, p);
        measurements["tensors"][path + ":" + slot] =
            measured(error_metrics(w, dequantize_uniform(q)), distribution_report(w));
        rec = blob.append(q);
      } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
      }
    }
    if (node.kind.tag() != LayerKind::kSoftmax) return;
    const std::string site = site_id(path);
    auto ab = act_bounds.find(site);
    if (ab == act_bounds.end()) return;
    const LogParams p = log2_params(ab->second.min, ab->second.max, qcfg);
    std::vector<Tensor> samples;
    for (int i = 0; i < traces->n_samples; ++i) samples.push_back(traces->sample(site, i));
    const Tensor all = concat(samples);
    measurements["sites"][site] =
        measured(error_metrics(all, dequantize_log2(quantize_log2(all, p))), distribution_report(all));
    node.quant_act = p;
  });

  out.blob = std::move(blob).release();
  out.metadata["quantization"] = {{"report_version", kReportVersion},
                                  {"config", config_to_json(cfg)},
                                  {"measurements", std::move(measurements)},
                                  {"skipped_sites", skipped},
                                  {"ignored_sites", ignored}};
  validate(out);
  QuantReport report = derive_report(out);
  return {std::move(out), std::move(report)};
}

QuantReport derive_report(const ModelPackage& pkg) {
  QuantReport r;
  const json* meta = nullptr;
  if (pkg.metadata.is_object() && pkg.metadata.contains("quantization")) {
    meta = &pkg.metadata.at("quantization");
    r.config = config_from_json(meta->at("config"));
  }
  r.partition = identify_blocks(pkg);

  auto lookup = [&](const char* section, const std::string& key) -> const json* {
    if (!meta) return nullptr;
    const auto& m = meta->at("measurements").at(section);
    return m.contains(key) ? &m.at(key) : nullptr;
  };

  for_each_node(pkg.root, [&](const ModuleNode& n, const std::string& path) {
    for (const auto& [slot, rec] : n.tensors) {
      TensorEntry e;
      e.path = path;
      e.slot = slot;
      const auto count = rec.shape.element_count();
      e.fp32_bytes = count * sizeof(float);
      if (rec.dtype == DType::kU8) {
        const auto& p = std::get<AffineParams>(*rec.quant);
        e.scheme = "uniform";
        e.params = p;
        e.quant_bytes = count + kParamOverheadBytes;
        if (const json* m = lookup("tensors", path + ":" + slot)) {
          e.mse = m->at("mse").get<double>();
          e.max_abs_err = m->at("max_abs_err").get<double>();
          e.diagnostics = diagnostics_from_json(m->at("diagnostics"));
        }
        if (p.degenerate()) r.warnings.push_back("degenerate weight range at " + path);
      } else {
        e.scheme = "none";
        e.quant_bytes = rec.nbytes;
      }
      r.fp32_bytes += e.fp32_bytes;
      r.quant_bytes += e.quant_bytes;
      r.tensors.push_back(std::move(e));
    }
    if (n.quant_act) {
      SiteEntry s;
      s.site = site_id(path);
      s.params = *n.quant_act;
      if (const json* m = lookup("sites", s.site)) {
        s.mse = m->at("mse").get<double>();
        s.max_abs_err = m->at("max_abs_err").get<double>();
        s.diagnostics = diagnostics_from_json(m->at("diagnostics"));
      }
      if (s.params.degenerate()) r.warnings.push_back("degenerate activation range at " + s.site);
      r.sites.push_back(std::move(s));
    }
  });

  if (meta) {
    for (const auto& site : meta->at("skipped_sites")) {
      r.warnings.push_back("uncalibrated softmax site skipped: " + site.get<std::string>());
    }
    for (const auto& site : meta->value("ignored_sites", json::array())) {
      r.warnings.push_back("softmax site outside transformer blocks ignored: " + site.get<std::string>());
    }
  }
  const bool any_quantized =
      !r.sites.empty() ||
      std::any_of(r.tensors.begin(), r.tensors.end(), [](const TensorEntry& e) { return e.params; });
  if (!any_quantized) r.warnings.push_back("nothing quantized");
  r.compression_ratio = r.quant_bytes == 0 ? 1.0
                                           : static_cast<double>(r.fp32_bytes) /
                                                 static_cast<double>(r.quant_bytes);
  return r;
}

EvalSummary evaluate(const ModelPackage& fp32, const ModelPackage& quantized,
                     std::span<const Tensor> inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate: no inputs");
  EvalSummary s;
  s.n_inputs = inputs.size();
  std::vector<float> all_ref, all_sim;
  std::size_t agree = 0;
  for (const auto& in : inputs) {
    const auto ref = execute(fp32, in, ExecMode::kFp32);
    const auto sim = execute(fp32, in, ExecMode::kSimulatedQuant, &quantized);
    const auto m = error_metrics(ref.output, sim.output);
    s.min_cosine_similarity = std::min(s.min_cosine_similarity, m.cosine_sim);
    s.max_abs_diff = std::max(s.max_abs_diff, m.max_abs_err);
    if (argmax(ref.output.data()) == argmax(sim.output.data())) ++agree;
    all_ref.insert(all_ref.end(), ref.output.data().begin(), ref.output.data().end());
    all_sim.insert(all_sim.end(), sim.output.data().begin(), sim.output.data().end());
    for (const auto& [site, t] : ref.captured_softmax) {
      const auto& dims = t.shape().dims();
      const std::size_t width = dims.empty() ? 1 : static_cast<std::size_t>(dims.back());
      for (std::size_t r = 0; r < t.size(); r += width) {
        double sum = 0.0;
        for (std::size_t i = 0; i < width; ++i) sum += t[r + i];
        s.max_softmax_row_error = std::max(s.max_softmax_row_error, std::abs(sum - 1.0));
      }
    }
  }
  const Shape flat{static_cast<std::int64_t>(all_ref.size())};
  s.cosine_similarity =
      error_metrics(Tensor(flat, std::move(all_ref)), Tensor(flat, std::move(all_sim))).cosine_sim;
  s.top1_agreement = static_cast<double>(agree) / static_cast<double>(inputs.size());
  return s;
}

json to_json(const EvalSummary& s) {
  return {{"n_inputs", s.n_inputs},
          {"cosine_similarity", s.cosine_similarity},
          {"min_cosine_similarity", s.min_cosine_similarity},
          {"max_abs_diff", s.max_abs_diff},
          {"top1_agreement", s.top1_agreement},
          {"max_softmax_row_error", s.max_softmax_row_error}};
}

}  // namespace hybridq
