// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "hybridq/calibration.hpp"
#include "hybridq/error.hpp"
#include "hybridq/executor.hpp"
#include "hybridq/fixtures.hpp"
#include "test_support.hpp"

namespace hybridq {
namespace {

ModelPackage with_convs(std::vector<std::vector<float>> weights, bool grouped = false) {
  BlobWriter blob;
  ModelPackage pkg;
  pkg.root.name = "m";
  ModuleNode group;
  group.name = "stage";
  for (std::size_t i = 0; i < weights.size(); ++i) {
    ModuleNode c;
    c.name = "c" + std::to_string(i);
    c.kind = LayerKind::kConv2d;
    const auto n = static_cast<std::int64_t>(weights[i].size());
    c.tensors["weight"] = blob.append(Tensor(Shape{n}, weights[i]));
    (grouped ? group.children : pkg.root.children).push_back(c);
  }
  if (grouped) pkg.root.children.push_back(group);
  pkg.blob = std::move(blob).release();
  return pkg;
}

TracePackage traces_of(const std::string& site, const std::vector<std::vector<float>>& samples) {
  TraceBuilder b;
  for (const auto& s : samples) b.add(site, Tensor(Shape{static_cast<std::int64_t>(s.size())}, s));
  return std::move(b).finish(static_cast<int>(samples.size()));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hybridq::Error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(CalibrateWeights, SingleConv) {
  const auto pkg = with_convs({{-1.0f, 0.0f, 1.0f}});
  const auto b = calibrate_weights(pkg, identify_blocks(pkg));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b.at("m.c0"), (Range{-1.0f, 1.0f}));
}

TEST(CalibrateWeights, IndependentPerConv) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<float> d(-4.0f, 4.0f);
  std::vector<std::vector<float>> ws(2, std::vector<float>(100));
  for (auto& w : ws) for (auto& x : w) x = d(rng);
  const auto pkg = with_convs(ws);
  const auto b = calibrate_weights(pkg, identify_blocks(pkg));
  for (std::size_t i = 0; i < ws.size(); ++i) {
    float lo = ws[i][0], hi = ws[i][0];
    for (float x : ws[i]) lo = std::min(lo, x), hi = std::max(hi, x);
    EXPECT_EQ(b.at("m.c" + std::to_string(i)), (Range{lo, hi}));
  }
}

TEST(CalibrateWeights, PerGroupSharesSiblingRange) {
  const auto pkg = with_convs({{-1.0f, 0.5f}, {0.0f, 3.0f}}, true);
  const auto b = calibrate_weights(pkg, identify_blocks(pkg), Granularity::kPerGroup);
  EXPECT_EQ(b.at("m.stage.c0"), (Range{-1.0f, 3.0f}));
  EXPECT_EQ(b.at("m.stage.c1"), (Range{-1.0f, 3.0f}));
}

TEST(CalibrateWeights, EmptyAndMissing) {
  const auto pkg = with_convs({});
  EXPECT_TRUE(calibrate_weights(pkg, identify_blocks(pkg)).empty());
  BlockPartition bogus;
  bogus.cnn = {"m.nowhere"};
  EXPECT_EQ(code_of([&] { calibrate_weights(pkg, bogus); }), ErrorCode::kPathNotFound);
}

TEST(Granularity, Parse) {
  EXPECT_EQ(parse_granularity("per-module"), Granularity::kPerModule);
  EXPECT_EQ(parse_granularity("per-group"), Granularity::kPerGroup);
  EXPECT_EQ(to_string(Granularity::kPerGroup), "per-group");
  EXPECT_THROW(parse_granularity("per-row"), Error);
}

TEST(CalibrateActivations, RunningMinMax) {
  BlockPartition part;
  part.transformer = {"m.attn"};
  const auto t = traces_of("m.attn.sm:post_softmax", {{0.2f, 0.8f}, {0.1f, 0.9f}});
  EXPECT_EQ(calibrate_activations(t, part).at("m.attn.sm:post_softmax"), (Range{0.1f, 0.9f}));
}

TEST(CalibrateActivations, Errors) {
  BlockPartition part;
  part.transformer = {"m.attn"};
  EXPECT_EQ(code_of([&] { calibrate_activations(TraceBuilder{}.finish(0), part); }), ErrorCode::kNoSites);
  EXPECT_EQ(code_of([&] { calibrate_activations(traces_of("m.other.sm:post_softmax", {{0.5f, 0.5f}}), part); }),
            ErrorCode::kUnpartitionedSite);
  EXPECT_EQ(code_of([&] { calibrate_activations(traces_of("m.attn.sm:post_softmax", {{1.5f, -0.5f}}), part); }),
            ErrorCode::kNotPostSoftmax);
}

TEST(CalibrateActivations, EqualsFlatScan) {
  std::mt19937_64 rng(52);
  std::normal_distribution<float> logit(0.0f, 3.0f);
  std::vector<std::vector<float>> samples;
  std::vector<float> flat;
  for (int s = 0; s < 32; ++s) {
    std::vector<float> row(16);
    double sum = 0;
    for (auto& x : row) sum += (x = std::exp(logit(rng)));
    for (auto& x : row) x = static_cast<float>(x / sum);
    flat.insert(flat.end(), row.begin(), row.end());
    samples.push_back(row);
  }
  BlockPartition part;
  part.transformer = {"m.attn"};
  const auto r = calibrate_activations(traces_of("m.attn.sm:post_softmax", samples), part);
  EXPECT_EQ(r.at("m.attn.sm:post_softmax"), min_max(flat));
}

TEST(Executor, LinearSoftmaxOnZeros) {
  BlobWriter blob;
  ModelPackage pkg;
  pkg.root.name = "m";
  ModuleNode fc;
  fc.name = "fc";
  fc.kind = LayerKind::kLinear;
  fc.tensors["weight"] = blob.append(Tensor(Shape{2, 2}, {1.0f, 0.0f, 0.0f, 1.0f}));
  ModuleNode sm;
  sm.name = "sm";
  sm.kind = LayerKind::kSoftmax;
  pkg.root.children = {fc, sm};
  pkg.blob = std::move(blob).release();
  const auto r = execute(pkg, Tensor(Shape{2}, {0.0f, 0.0f}), ExecMode::kFp32);
  EXPECT_EQ(r.output, Tensor(Shape{2}, {0.5f, 0.5f}));
  EXPECT_EQ(r.captured_softmax.at("m.sm:post_softmax"), r.output);
  EXPECT_EQ(code_of([&] { execute(pkg, r.output, ExecMode::kSimulatedQuant); }),
            ErrorCode::kMissingQuantParams);
}

TEST(Executor, ConvMatchesDirectLoop) {
  const auto pkg = fixtures::conv_heavy();
  const auto in = fixtures::random_inputs(1, 3).front();
  const auto plan = ExecPlan::build(pkg.root);
  ASSERT_GE(plan.steps().size(), 1u);
  const auto* conv1 = plan.steps().front().node;
  const auto w = pkg.read_f32(*conv1->tensor("weight"));
  const auto b = pkg.read_f32(*conv1->tensor("bias"));

  ModelPackage single;
  single.root.name = "m";
  single.root.children.push_back(*conv1);
  single.blob = pkg.blob;
  const auto out = execute(single, in, ExecMode::kFp32).output;
  ASSERT_EQ(out.shape(), (Shape{32, 8, 8}));
  for (int o = 0; o < 32; o += 7) {
    for (int y = 0; y < 8; y += 3) {
      for (int x = 0; x < 8; x += 3) {
        double acc = b[static_cast<std::size_t>(o)];
        for (int c = 0; c < 3; ++c)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = y + ky - 1, ix = x + kx - 1;
              if (iy < 0 || iy >= 8 || ix < 0 || ix >= 8) continue;
              acc += static_cast<double>(w[static_cast<std::size_t>(((o * 3 + c) * 3 + ky) * 3 + kx)]) *
                     in[static_cast<std::size_t>((c * 8 + iy) * 8 + ix)];
            }
        EXPECT_NEAR(out[static_cast<std::size_t>((o * 8 + y) * 8 + x)], acc, 1e-4);
      }
    }
  }
}

TEST(Executor, RejectsNonExecutableKinds) {
  ModuleNode root;
  root.name = "m";
  ModuleNode att;
  att.name = "a";
  att.kind = LayerKind::kAttention;
  root.children.push_back(att);
  EXPECT_EQ(code_of([&] { ExecPlan::build(root); }), ErrorCode::kNotExecutable);
}

TEST(Executor, ShapeMismatch) {
  const auto pkg = fixtures::toy_hybrid();
  EXPECT_EQ(code_of([&] { execute(pkg, Tensor(Shape{4, 8, 8}, std::vector<float>(256)), ExecMode::kFp32); }),
            ErrorCode::kShapeMismatch);
}

TEST(Executor, DeterministicAndNormalized) {
  const auto pkg = fixtures::toy_hybrid();
  for (const auto& in : fixtures::random_inputs(8, 4)) {
    const auto a = execute(pkg, in, ExecMode::kFp32);
    const auto b = execute(pkg, in, ExecMode::kFp32);
    EXPECT_EQ(a.output, b.output);
    const auto& probs = a.captured_softmax.at("m.attn_block.softmax:post_softmax");
    EXPECT_EQ(probs.shape(), (Shape{8, 16}));
    for (std::size_t r = 0; r < probs.size(); r += 16) {
      double sum = 0;
      for (std::size_t i = 0; i < 16; ++i) sum += probs[r + i];
      EXPECT_NEAR(sum, 1.0, 1e-5);
    }
  }
}

TEST(Traces, RecordedBoundsMatchDirectScan) {
  const auto pkg = fixtures::toy_hybrid();
  const auto inputs = fixtures::random_inputs(32, 6);
  const auto traces = record_traces(pkg, inputs);
  EXPECT_EQ(traces.n_samples, 32);
  ASSERT_EQ(traces.sites.size(), 1u);
  std::vector<float> flat;
  for (const auto& in : inputs) {
    const auto t = execute(pkg, in, ExecMode::kFp32).captured_softmax.at("m.attn_block.softmax:post_softmax");
    flat.insert(flat.end(), t.data().begin(), t.data().end());
  }
  const auto bounds = calibrate_activations(traces, identify_blocks(pkg));
  EXPECT_EQ(bounds.at("m.attn_block.softmax:post_softmax"), min_max(flat));

  const auto one = record_traces(pkg, std::span(inputs).first(1));
  EXPECT_EQ(one.n_samples, 1);
}

TEST(Inputs, FileRoundTripAndMissingPath) {
  const auto inputs = fixtures::random_inputs(3, 8);
  testing::TempDir dir;
  const auto path = dir / "inputs.bin";
  write_inputs(path, inputs);
  EXPECT_EQ(read_inputs(path), inputs);
  std::filesystem::remove(path);
  try {
    read_inputs(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

}  // namespace
}  // namespace hybridq
