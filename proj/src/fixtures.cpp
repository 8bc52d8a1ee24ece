// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/fixtures.hpp"

#include <cmath>
#include <random>

namespace hybridq::fixtures {
namespace {

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  ModuleNode leaf(std::string name, LayerKind kind) {
    ModuleNode n;
    n.name = std::move(name);
    n.kind = kind;
    return n;
  }

  ModuleNode container(std::string name, std::vector<ModuleNode> children) {
    ModuleNode n = leaf(std::move(name), LayerKind::kContainer);
    n.children = std::move(children);
    return n;
  }

  // Kaiming-uniform style init: U(-b, b) with b = 1/sqrt(fan_in).
  ModuleNode conv(std::string name, std::int64_t out, std::int64_t in, std::int64_t k,
                  std::int64_t stride, std::int64_t pad) {
    ModuleNode n = leaf(std::move(name), LayerKind::kConv2d);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
    n.tensors["weight"] = blob_.append(uniform(Shape{out, in, k, k}, bound));
    n.tensors["bias"] = blob_.append(uniform(Shape{out}, bound));
    n.attrs["stride"] = stride;
    n.attrs["padding"] = pad;
    return n;
  }

  ModuleNode linear(std::string name, std::int64_t out, std::int64_t in, double gain = 1.0) {
    ModuleNode n = leaf(std::move(name), LayerKind::kLinear);
    const double bound = gain / std::sqrt(static_cast<double>(in));
    n.tensors["weight"] = blob_.append(uniform(Shape{out, in}, bound));
    n.tensors["bias"] = blob_.append(uniform(Shape{out}, bound));
    return n;
  }

  ModuleNode flatten(std::string name, std::int64_t start_dim) {
    ModuleNode n = leaf(std::move(name), LayerKind::kFlatten);
    n.attrs["start_dim"] = start_dim;
    return n;
  }

  ModelPackage finish(ModuleNode root, const std::string& model_name) && {
    ModelPackage pkg;
    pkg.root = std::move(root);
    pkg.metadata = {{"model", model_name}};
    pkg.blob = std::move(blob_).release();
    validate(pkg);
    return pkg;
  }

 private:
  Tensor uniform(Shape shape, double bound) {
    std::uniform_real_distribution<float> dist(static_cast<float>(-bound), static_cast<float>(bound));
    std::vector<float> v(shape.element_count());
    for (auto& x : v) x = dist(rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  std::mt19937_64 rng_;
  BlobWriter blob_;
};

}  // namespace

Shape image_shape() { return Shape{3, 8, 8}; }

ModelPackage block_example() {
  Builder b(1);
  std::vector<ModuleNode> children;
  children.push_back(b.conv("conv1", 4, 3, 3, 1, 1));
  std::vector<ModuleNode> block;
  block.push_back(b.linear("qkv", 16, 16));
  block.push_back(b.leaf("sm", LayerKind::kSoftmax));
  children.push_back(b.container("transformer_block", std::move(block)));
  ModuleNode root = b.container("m", std::move(children));
  return std::move(b).finish(std::move(root), "block_example");
}

ModelPackage toy_hybrid(std::uint64_t seed) {
  Builder b(seed);
  std::vector<ModuleNode> children;
  children.push_back(b.conv("conv1", 8, 3, 3, 1, 1));
  children.push_back(b.leaf("relu1", LayerKind::kReLU));
  children.push_back(b.conv("conv2", 8, 8, 3, 2, 1));
  children.push_back(b.leaf("relu2", LayerKind::kReLU));
  children.push_back(b.flatten("tokens", 1));
  std::vector<ModuleNode> attn;
  // Larger gain sharpens the attention rows.
  attn.push_back(b.linear("q_proj", 16, 16, 4.0));
  attn.push_back(b.leaf("softmax", LayerKind::kSoftmax));
  attn.push_back(b.linear("v_proj", 16, 16));
  children.push_back(b.container("attn_block", std::move(attn)));
  children.push_back(b.flatten("flat", 0));
  children.push_back(b.linear("head", 10, 128));
  ModuleNode root = b.container("m", std::move(children));
  return std::move(b).finish(std::move(root), "toy_hybrid");
}

ModelPackage conv_heavy(std::uint64_t seed) {
  Builder b(seed);
  std::vector<ModuleNode> children;
  children.push_back(b.conv("conv1", 32, 3, 3, 1, 1));
  children.push_back(b.leaf("relu1", LayerKind::kReLU));
  children.push_back(b.conv("conv2", 64, 32, 3, 2, 1));
  children.push_back(b.leaf("relu2", LayerKind::kReLU));
  children.push_back(b.conv("conv3", 4, 64, 4, 1, 0));
  children.push_back(b.flatten("flat", 0));
  ModuleNode root = b.container("m", std::move(children));
  return std::move(b).finish(std::move(root), "conv_heavy");
}

std::vector<Tensor> random_inputs(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<Tensor> out;
  out.reserve(count);
  const Shape shape = image_shape();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> v(shape.element_count());
    for (auto& x : v) x = dist(rng);
    out.emplace_back(shape, std::move(v));
  }
  return out;
}

}  // namespace hybridq::fixtures
