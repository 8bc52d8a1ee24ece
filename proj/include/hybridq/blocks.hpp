// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridq/package.hpp"

namespace hybridq {

/// Full paths of nodes routed to the uniform (cnn) and log2 (transformer)
/// paths, in discovery order. The lists are disjoint.
struct BlockPartition {
  std::vector<std::string> cnn;
  std::vector<std::string> transformer;

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;
};

struct BlockScan {
  BlockPartition partition;
  std::size_t visits = 0;  // worklist pops; one per node
};

/// Case-insensitive match of "attn", "attention" or "transformer" anywhere in
/// a node name.
bool has_transformer_marker(std::string_view name);

/// Depth-first scan of the module tree with a LIFO worklist.
///
/// For every child of a popped node, in declaration order: Conv2d goes to
/// `cnn`; otherwise Linear, or a child whose own name carries a transformer
/// marker, goes to `transformer`. Entries are full paths. The child is then
/// pushed. The root itself is never classified.
BlockScan scan_blocks(const ModuleNode& root);

BlockPartition identify_blocks(const ModelPackage& pkg);
std::size_t visit_count(const ModelPackage& pkg);

/// True if `path` equals a transformer entry or lies beneath one.
bool under_transformer(const BlockPartition& part, std::string_view path);

nlohmann::json to_json(const BlockPartition& part);

}  // namespace hybridq
