/* Copyright 2026 The gramnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// gramnet: train GRAM / GAN / MMD-net generators, run stability grids and
// render their artifacts.
//
//   gramnet train --config ring.cfg --seed 3 --out runs/ring
//   gramnet grid --method gan --axis h=2,4,8,16 --axis critic_hidden=20,100,200 --parallel 4
//   gramnet plot runs/ring
//
// The output root defaults to $GRAMNET_OUT, then ./runs.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gramnet/cli.h"

namespace {

std::optional<gramnet::Method> to_method(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return gramnet::method_from_string(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRAM-net experiments on ring and MNIST data"};
  app.require_subcommand(1);

  std::string config, method, out, run_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> axes;
  int parallel = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Sectioned key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override run.seed");
    sub->add_option("--method", method, "Override run.method")
        ->check(CLI::IsMember({"gram", "gan", "mmdnet"}));
    sub->add_option("--out", out, "Output directory (default: $GRAMNET_OUT or ./runs)");
  };

  CLI::App* train = app.add_subcommand("train", "Run one experiment");
  add_common(train);
  CLI::App* grid = app.add_subcommand("grid", "Run a Cartesian grid of experiments");
  add_common(grid);
  grid->add_option("--axis", axes,
                   "name=v1,v2,... with name in h, critic_hidden, generator_hidden, method, seed "
                   "(default: h=2,4,8,16 and critic_hidden=20,100,200)");
  grid->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  CLI::App* plot = app.add_subcommand("plot", "Render SVG plots of a run directory");
  plot->add_option("run_dir", run_dir, "Directory written by train")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  const std::optional<std::filesystem::path> config_path =
      config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config);
  const std::optional<std::string> out_flag = out.empty() ? std::nullopt : std::optional(out);
  if (*train) {
    return gramnet::cmd_train({config_path, seed, to_method(method), out_flag});
  }
  if (*grid) {
    return gramnet::cmd_grid({config_path, seed, to_method(method), out_flag, axes, parallel});
  }
  return gramnet::cmd_plot(run_dir);
}
