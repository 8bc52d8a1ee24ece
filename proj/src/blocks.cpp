// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/blocks.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace hybridq {

bool has_transformer_marker(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static constexpr std::array<std::string_view, 3> kMarkers = {"attn", "attention", "transformer"};
  return std::any_of(kMarkers.begin(), kMarkers.end(),
                     [&](std::string_view m) { return lower.find(m) != std::string::npos; });
}

BlockScan scan_blocks(const ModuleNode& root) {
  BlockScan scan;
  std::vector<std::pair<const ModuleNode*, std::string>> worklist;
  worklist.emplace_back(&root, root.name);
  while (!worklist.empty()) {
    auto [node, parent_path] = std::move(worklist.back());
    worklist.pop_back();
    ++scan.visits;
    for (const auto& child : node->children) {
      std::string path = join_path(parent_path, child.name);
      if (child.kind.tag() == LayerKind::kConv2d) {
        scan.partition.cnn.push_back(path);
      } else if (child.kind.tag() == LayerKind::kLinear || has_transformer_marker(child.name)) {
        scan.partition.transformer.push_back(path);
      }
      worklist.emplace_back(&child, std::move(path));
    }
  }
  return scan;
}

BlockPartition identify_blocks(const ModelPackage& pkg) { return scan_blocks(pkg.root).partition; }

std::size_t visit_count(const ModelPackage& pkg) { return scan_blocks(pkg.root).visits; }

bool under_transformer(const BlockPartition& part, std::string_view path) {
  return std::any_of(part.transformer.begin(), part.transformer.end(), [&](const std::string& e) {
    return path == e || (path.size() > e.size() && path.starts_with(e) && path[e.size()] == '.');
  });
}

nlohmann::json to_json(const BlockPartition& part) {
  return {{"cnn", part.cnn}, {"transformer", part.transformer}};
}

}  // namespace hybridq
