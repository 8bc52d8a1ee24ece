// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include <array>
#include <atomic>
#include <fstream>
#include <sstream>
#include <vector>

#include "hybridq/quantizers.hpp"

namespace hybridq::testing {
namespace {

constexpr std::array<const char*, 12> kStems = {
    "conv", "mlp",  "attn", "Attention", "TRANSFORMER", "block",
    "head", "xAtTnx", "stage", "transformer_blk", "norm", "proj"};

LayerKind random_kind(std::mt19937_64& rng) {
  static const std::array<LayerKind, 8> kinds = {
      LayerKind::kConv2d,  LayerKind::kLinear,    LayerKind::kReLU,
      LayerKind::kSoftmax, LayerKind::kAttention, LayerKind::kFlatten,
      LayerKind::kContainer, LayerKind::other("GELU")};
  return kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
}

std::string random_name(std::mt19937_64& rng, std::size_t sibling_index) {
  std::uniform_int_distribution<std::size_t> pick(0, kStems.size() - 1);
  return std::string(kStems[pick(rng)]) + "_" + std::to_string(sibling_index);
}

struct FlatNode {
  int parent;
  int depth;
  std::vector<int> children;
};

ModuleNode materialize(const std::vector<FlatNode>& flat, int index, std::mt19937_64& rng,
                       std::size_t sibling_index) {
  ModuleNode n;
  n.name = index == 0 ? "m" : random_name(rng, sibling_index);
  n.kind = index == 0 ? LayerKind(LayerKind::kContainer) : random_kind(rng);
  const auto& kids = flat[static_cast<std::size_t>(index)].children;
  for (std::size_t i = 0; i < kids.size(); ++i) n.children.push_back(materialize(flat, kids[i], rng, i));
  return n;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < needle.size() && match; ++j) {
      match = std::tolower(static_cast<unsigned char>(haystack[i + j])) == needle[j];
    }
    if (match) return true;
  }
  return false;
}

void classify(const ModuleNode& n, const std::string& path, OraclePartition& out) {
  for (const auto& c : n.children) {
    const std::string full = path + "." + c.name;
    if (c.kind == LayerKind(LayerKind::kConv2d)) {
      out.cnn.insert(full);
    } else if (c.kind == LayerKind(LayerKind::kLinear) || contains_ci(c.name, "attn") ||
               contains_ci(c.name, "attention") || contains_ci(c.name, "transformer")) {
      out.transformer.insert(full);
    }
    classify(c, full, out);
  }
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(shape.element_count());
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v));
}

Shape random_shape(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rank(1, 3);
  std::uniform_int_distribution<std::int64_t> dim(1, 5);
  std::vector<std::int64_t> dims(static_cast<std::size_t>(rank(rng)));
  for (auto& d : dims) d = dim(rng);
  return Shape(std::move(dims));
}

void populate(ModuleNode& n, std::mt19937_64& rng, BlobWriter& blob) {
  std::bernoulli_distribution coin(0.5);
  const auto tag = n.kind.tag();
  if (tag != LayerKind::kContainer) {
    if (tag == LayerKind::kConv2d || tag == LayerKind::kLinear || coin(rng)) {
      const Tensor w = random_tensor(rng, random_shape(rng), -3.0f, 3.0f);
      if (coin(rng)) {
        const Range r = min_max(w);
        n.tensors["weight"] = blob.append(quantize_uniform(w, affine_params(r.min, r.max, {})));
      } else {
        n.tensors["weight"] = blob.append(w);
      }
    }
    if (coin(rng)) n.tensors["bias"] = blob.append(random_tensor(rng, random_shape(rng), -1.0f, 1.0f));
    if (coin(rng)) n.attrs["stride"] = std::uniform_int_distribution<std::int64_t>(1, 3)(rng);
  }
  if (tag == LayerKind::kSoftmax && coin(rng)) {
    std::uniform_real_distribution<double> lo(0.0, 0.1), hi(0.5, 1.0);
    n.quant_act = log2_params(lo(rng), hi(rng), {});
  }
  for (auto& c : n.children) populate(c, rng, blob);
}

std::atomic<unsigned> temp_counter{0};

}  // namespace

ModuleNode random_tree(std::mt19937_64& rng, const TreeOptions& opt) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, opt.max_nodes)(rng);
  std::vector<FlatNode> flat{{-1, 1, {}}};
  std::vector<int> open{0};  // nodes that may still take children
  while (flat.size() < n) {
    const int parent = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    const int depth = flat[static_cast<std::size_t>(parent)].depth + 1;
    const int id = static_cast<int>(flat.size());
    flat.push_back({parent, depth, {}});
    flat[static_cast<std::size_t>(parent)].children.push_back(id);
    if (depth < opt.max_depth) open.push_back(id);
  }
  return materialize(flat, 0, rng, 0);
}

ModelPackage random_package(std::mt19937_64& rng, const TreeOptions& opt) {
  ModelPackage pkg;
  pkg.root = random_tree(rng, opt);
  BlobWriter blob;
  populate(pkg.root, rng, blob);
  pkg.blob = std::move(blob).release();
  pkg.metadata = {{"model", "random"}, {"seed_draw", static_cast<std::uint64_t>(rng() >> 11)}};
  return pkg;
}

OraclePartition oracle_classify(const ModuleNode& root) {
  OraclePartition out;
  classify(root, root.name, out);
  return out;
}

std::size_t oracle_node_count(const ModuleNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += oracle_node_count(c);
  return n;
}

int tree_depth(const ModuleNode& root) {
  int d = 0;
  for (const auto& c : root.children) d = std::max(d, tree_depth(c));
  return d + 1;
}

TempDir::TempDir() {
  std::random_device rd;
  std::ostringstream name;
  name << "hybridq-test-" << rd() << "-" << temp_counter++;
  path_ = std::filesystem::temp_directory_path() / name.str();
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace hybridq::testing
