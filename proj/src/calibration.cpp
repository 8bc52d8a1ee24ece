// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/calibration.hpp"

#include <algorithm>

#include "hybridq/error.hpp"
#include "hybridq/quantizers.hpp"

namespace hybridq {

Granularity parse_granularity(std::string_view s) {
  if (s == "per-module") return Granularity::kPerModule;
  if (s == "per-group") return Granularity::kPerGroup;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown granularity '" + std::string(s) + "' (expected per-module or per-group)");
}

std::string_view to_string(Granularity g) {
  return g == Granularity::kPerModule ? "per-module" : "per-group";
}

namespace {

std::string parent_of(const std::string& path) {
  const auto pos = path.rfind('.');
  return pos == std::string::npos ? std::string() : path.substr(0, pos);
}

Range merge(const Range& a, const Range& b) {
  return {std::min(a.min, b.min), std::max(a.max, b.max)};
}

}  // namespace

std::map<std::string, Range> calibrate_weights(const ModelPackage& pkg, const BlockPartition& part,
                                               Granularity granularity) {
  std::map<std::string, Range> bounds;
  for (const auto& path : part.cnn) {
    const ModuleNode* node = find_node(pkg.root, path);
    if (!node) throw Error(ErrorCode::kPathNotFound, "cnn entry not found in graph: " + path);
    const TensorRecord* weight = node->tensor("weight");
    if (!weight) continue;
    bounds[path] = min_max(pkg.read_f32(*weight));
  }
  if (granularity == Granularity::kPerGroup) {
    std::map<std::string, Range> groups;
    for (const auto& [path, r] : bounds) {
      auto [it, inserted] = groups.emplace(parent_of(path), r);
      if (!inserted) it->second = merge(it->second, r);
    }
    for (auto& [path, r] : bounds) r = groups.at(parent_of(path));
  }
  return bounds;
}

std::map<std::string, Range> calibrate_activations(const TracePackage& traces,
                                                   const BlockPartition& part) {
  if (traces.sites.empty()) throw Error(ErrorCode::kNoSites, "no sites");
  std::map<std::string, Range> bounds;
  for (const auto& [site, records] : traces.sites) {
    const auto node_path = site_node_path(site);
    if (!node_path || !under_transformer(part, *node_path)) {
      throw Error(ErrorCode::kUnpartitionedSite, "unpartitioned site: " + site);
    }
    if (records.empty()) throw Error(ErrorCode::kSampleCountMismatch, "site has no samples: " + site);
    std::optional<Range> acc;
    for (const auto& rec : records) {
      const Range r = min_max(read_f32(traces.blob, rec));
      if (r.min < 0.0f || static_cast<double>(r.max) > 1.0 + kSoftmaxTolerance) {
        throw Error(ErrorCode::kNotPostSoftmax, "not a post-softmax activation at " + site);
      }
      acc = acc ? merge(*acc, r) : r;
    }
    bounds[site] = *acc;
  }
  return bounds;
}

}  // namespace hybridq
