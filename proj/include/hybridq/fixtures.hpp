// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small self-contained models for demos and tests. Weights are drawn from a
// seeded generator, so every build produces identical packages.

#include <cstdint>
#include <vector>

#include "hybridq/package.hpp"

namespace hybridq::fixtures {

/// Input shape shared by the executable fixtures: [3, 8, 8].
Shape image_shape();

/// m { conv1: Conv2d, transformer_block { qkv: Linear, sm: Softmax } }.
/// Not executable end to end; used for block identification.
ModelPackage block_example();

/// Executable hybrid model:
///   conv1 (3->8, 3x3, pad 1) -> relu1 -> conv2 (8->8, 3x3, stride 2, pad 1)
///   -> relu2 -> tokens (Flatten start_dim 1: [8, 16])
///   -> attn_block { q_proj: Linear 16->16, softmax, v_proj: Linear 16->16 }
///   -> flat (Flatten) -> head (Linear 128->10)
ModelPackage toy_hybrid(std::uint64_t seed = 7);

/// Executable model whose parameter bytes are more than 99% conv weights:
///   conv1 (3->32, pad 1) -> relu -> conv2 (32->64, stride 2, pad 1) -> relu
///   -> conv3 (64->4, 4x4) -> flat.
ModelPackage conv_heavy(std::uint64_t seed = 11);

/// Standard-normal inputs of image_shape().
std::vector<Tensor> random_inputs(std::size_t count, std::uint64_t seed);

}  // namespace hybridq::fixtures
