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

// Experiment runner behind the `gramnet` tool: the config file format, single
// runs and grids written to disk, and SVG rendering of their artifacts.
//
// Config files are sectioned key = value text:
//
//   [run]
//   method = gram
//   iterations = 2000
//   [critic]
//   hidden = [100, 100]
//   learning_rate = 1e-3
//
// Keys not present keep the method's defaults. Unknown sections or keys,
// duplicates and invalid values are errors that carry the line number.

#ifndef GRAMNET_CLI_H_
#define GRAMNET_CLI_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gramnet/data.h"
#include "gramnet/train.h"

namespace gramnet {

class ConfigError : public std::runtime_error {
 public:
  // line is 1-based; 0 when the error concerns the config as a whole.
  ConfigError(int line, std::string key, const std::string& message);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

// A method override replaces run.method before defaults are filled in, so the
// optimizer defaults follow the overriding method.
TrainConfig parse_config_text(std::string_view text,
                              std::optional<Method> method = std::nullopt);
TrainConfig parse_config(const std::filesystem::path& path,
                         std::optional<Method> method = std::nullopt);
// Every key, doubles with 17 significant digits; parses back to an equal config.
std::string serialize_config(const TrainConfig& config);

// --- runs ----------------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiverged = 2;

struct RunSummary {
  std::string run_id;
  bool diverged = false;
  std::string reason;
  int iterations_run = 0;
  // Ring datasets only; -1 otherwise.
  int modes_captured = -1;
  double high_quality_fraction = 0.0;
  double mean_spread = 0.0;
  double final_held_out_mmd2 = 0.0;
  double final_frechet = 0.0;
};

std::string run_id(const TrainConfig& config);

// Trains and writes trace.csv, snapshots/, checkpoints/, metrics.json and
// manifest.json into outdir. Divergence is reported in the summary, the
// manifest and the metrics, with the trace up to the failing iteration.
RunSummary run_to_directory(const TrainConfig& config, const std::filesystem::path& outdir);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);

// --output flag if given, else $GRAMNET_OUT, else "runs".
std::filesystem::path output_root(const std::optional<std::string>& flag);

struct TrainCommand {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<Method> method;
  // Run directory; defaults to <output root>/<run id>.
  std::optional<std::string> out;
};
int cmd_train(const TrainCommand& cmd);

// --- grids -----------------------------------------------------------------------

// One axis of a grid, parsed from "name=v1,v2,...". Names: h, critic_hidden,
// generator_hidden (width of every hidden layer), method, seed.
struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};
GridAxis parse_grid_axis(std::string_view spec);
// h in {2,4,8,16} x critic_hidden in {20,100,200}.
std::vector<GridAxis> default_grid();

struct GridCell {
  std::string name;
  std::vector<std::string> values;  // one per axis
  TrainConfig config;
};
// Cartesian product, first axis varying slowest.
std::vector<GridCell> expand_grid(std::string_view config_text, std::optional<Method> method,
                                  std::optional<std::uint64_t> seed,
                                  const std::vector<GridAxis>& axes);

struct GridCommand {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<Method> method;
  std::optional<std::string> out;
  std::vector<std::string> axes;
  int parallel = 1;
};
int cmd_grid(const GridCommand& cmd);

// --- plots -------------------------------------------------------------------------

// First two columns of each set; data and generated marks carry the classes
// "data" and "gen".
std::string scatter_svg(const Matrix& data, const Matrix& generated, const std::string& title);
// Loss columns of a trace.csv on a log10 axis; non-positive or non-finite
// values are left out. Throws std::runtime_error on a trace without records.
std::string trace_svg(const CsvTable& trace);
int cmd_plot(const std::filesystem::path& run_dir);

}  // namespace gramnet

#endif  // GRAMNET_CLI_H_
