// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <string_view>

#include "hybridq/blocks.hpp"
#include "hybridq/package.hpp"
#include "hybridq/tensor.hpp"

namespace hybridq {

/// Weight range granularity. Per-module gives every conv weight its own
/// range; per-group shares one range across the conv siblings of a parent.
enum class Granularity { kPerModule, kPerGroup };

Granularity parse_granularity(std::string_view s);
std::string_view to_string(Granularity g);

struct CalibStats {
  std::map<std::string, Range> weight_bounds;      // conv node path -> range
  std::map<std::string, Range> activation_bounds;  // site id -> range in [0, 1]
  int n_samples = 0;
};

/// Min/max of every cnn entry that owns a weight tensor; containers are
/// skipped. Throws kPathNotFound for entries missing from the graph.
std::map<std::string, Range> calibrate_weights(const ModelPackage& pkg, const BlockPartition& part,
                                               Granularity granularity = Granularity::kPerModule);

/// Running min/max per site over all samples. Every site must lie under a
/// transformer entry and every value in [0, 1 + 1e-6].
std::map<std::string, Range> calibrate_activations(const TracePackage& traces,
                                                   const BlockPartition& part);

}  // namespace hybridq
