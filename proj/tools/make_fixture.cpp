// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

// Writes one of the built-in demo models (and optionally a matching input
// file) to disk.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hybridq/error.hpp"
#include "hybridq/executor.hpp"
#include "hybridq/fixtures.hpp"

int main(int argc, char** argv) {
  using namespace hybridq;
  CLI::App app{"Write a demo model package"};
  std::string kind, out;
  std::optional<std::string> inputs;
  std::size_t count = 32;
  std::uint64_t seed = 0;
  app.add_option("kind", kind, "toy-hybrid | conv-heavy | block-example")
      ->required()
      ->check(CLI::IsMember({"toy-hybrid", "conv-heavy", "block-example"}));
  app.add_option("out", out, "Package directory")->required();
  app.add_option("--inputs", inputs, "Also write an executor input file here");
  app.add_option("--count", count, "Number of inputs")->capture_default_str();
  app.add_option("--seed", seed, "Input seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const ModelPackage pkg = kind == "toy-hybrid"   ? fixtures::toy_hybrid()
                             : kind == "conv-heavy" ? fixtures::conv_heavy()
                                                    : fixtures::block_example();
    save_package(pkg, out);
    if (inputs) write_inputs(*inputs, fixtures::random_inputs(count, seed));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
