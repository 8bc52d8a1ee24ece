// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "hybridq/blocks.hpp"
#include "hybridq/package.hpp"

namespace hybridq::testing {

struct TreeOptions {
  std::size_t max_nodes = 500;
  int max_depth = 6;  // levels, root included
};

/// Random module tree without tensors. Names mix marker substrings in
/// random case; sibling names are unique.
ModuleNode random_tree(std::mt19937_64& rng, const TreeOptions& opt = {});

/// Valid package over a random tree: every Conv2d/Linear gets a weight,
/// some nodes get extra f32 or u8 tensors, some Softmax nodes get quant_act.
ModelPackage random_package(std::mt19937_64& rng, const TreeOptions& opt = {});

struct OraclePartition {
  std::set<std::string> cnn;
  std::set<std::string> transformer;
};

/// Plain recursive classifier with its own substring matcher.
OraclePartition oracle_classify(const ModuleNode& root);
std::size_t oracle_node_count(const ModuleNode& root);
int tree_depth(const ModuleNode& root);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& p);

}  // namespace hybridq::testing
