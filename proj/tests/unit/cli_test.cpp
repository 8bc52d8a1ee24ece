// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "test_support.hpp"

namespace {

using hybridq::testing::read_text;
using hybridq::testing::TempDir;

struct CliRun {
  int exit_code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  CliRun run(const std::string& binary, const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = "\"" + binary + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
  }
  CliRun cli(const std::string& args) { return run(HYBRIDQ_CLI_PATH, args); }
  CliRun fixture(const std::string& args) { return run(HYBRIDQ_FIXTURE_PATH, args); }
  std::string at(const std::string& name) const { return "\"" + (dir_ / name).string() + "\""; }

  TempDir dir_;
};

TEST_F(Cli, InspectPrintsHandTracedPartition) {
  ASSERT_EQ(fixture("block-example " + at("model")).exit_code, 0);
  const auto r = cli("inspect " + at("model") + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("cnn"), nlohmann::json::array({"m.conv1"}));
  EXPECT_EQ(j.at("transformer"), nlohmann::json::array({"m.transformer_block", "m.transformer_block.qkv"}));

  const auto text = cli("inspect " + at("model"));
  EXPECT_EQ(text.exit_code, 0);
  EXPECT_NE(text.out.find("nodes visited: 5"), std::string::npos);
}

TEST_F(Cli, FullFlowAndReportReproduction) {
  ASSERT_EQ(fixture("toy-hybrid " + at("model") + " --inputs " + at("calib.bin") + " --count 32 --seed 1").exit_code, 0);
  ASSERT_EQ(fixture("toy-hybrid " + at("unused") + " --inputs " + at("eval.bin") + " --count 16 --seed 2").exit_code, 0);
  auto r = cli("trace " + at("model") + " --inputs " + at("calib.bin") + " --out " + at("traces"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = cli("quantize " + at("model") + " --traces " + at("traces") + " --out " + at("q") + " --report " + at("r.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto report = cli("report " + at("q"));
  ASSERT_EQ(report.exit_code, 0) << report.err;
  EXPECT_EQ(report.out, read_text(dir_ / "r.json"));

  const auto eval = cli("eval " + at("model") + " " + at("q") + " --inputs " + at("eval.bin"));
  ASSERT_EQ(eval.exit_code, 0) << eval.err;
  const auto j = nlohmann::json::parse(eval.out);
  EXPECT_EQ(j.at("n_inputs"), 16);
  EXPECT_GE(j.at("cosine_similarity").get<double>(), 0.99);
}

TEST_F(Cli, QuantizeWithoutTracesNeedsFlag) {
  ASSERT_EQ(fixture("toy-hybrid " + at("model")).exit_code, 0);
  auto r = cli("quantize " + at("model") + " --out " + at("q"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("uncalibrated"), std::string::npos);
  r = cli("quantize " + at("model") + " --out " + at("q") + " --allow-uncalibrated");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: uncalibrated softmax site skipped"), std::string::npos);
}

TEST_F(Cli, EvalMissingInputNamesPath) {
  ASSERT_EQ(fixture("toy-hybrid " + at("model")).exit_code, 0);
  const auto missing = (dir_ / "nope.bin").string();
  const auto r = cli("eval " + at("model") + " " + at("model") + " --inputs \"" + missing + "\"");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(Cli, ErrorsExitNonZero) {
  EXPECT_NE(cli("inspect " + at("absent")).exit_code, 0);
  EXPECT_NE(cli("").exit_code, 0);
  EXPECT_NE(cli("frobnicate").exit_code, 0);
  ASSERT_EQ(fixture("conv-heavy " + at("model")).exit_code, 0);
  EXPECT_NE(cli("quantize " + at("model") + " --out " + at("q") + " --bits 9").exit_code, 0);
  EXPECT_NE(cli("quantize " + at("model") + " --out " + at("q") + " --granularity per-row").exit_code, 0);
}

}  // namespace
