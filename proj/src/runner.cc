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

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gramnet/cli.h"
#include "gramnet/metrics.h"
#include "gramnet/random.h"

#ifndef GRAMNET_VERSION
#define GRAMNET_VERSION "unknown"
#endif

namespace gramnet {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// NaN marks a field that does not apply to the method.
std::string trace_field(double v) { return std::isnan(v) ? "nan" : format_double(v); }

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string snapshot_stem(int iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter-%06d", iter);
  return buf;
}

std::vector<std::string> column_names(const char* prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < n; ++j) h.push_back(prefix + std::to_string(j));
  return h;
}

bool is_ring(const TrainConfig& c) { return c.data != DataKind::kMnist; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string run_id(const TrainConfig& c) {
  return std::string(to_string(c.method)) + "-" + std::string(to_string(c.data)) + "-seed" +
         std::to_string(c.seed);
}

fs::path output_root(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("GRAMNET_OUT"); env && *env) return env;
  return "runs";
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iter,generator_mmd2,pd_estimate,critic_loss,gan_d_loss,gan_g_loss,"
         "generator_grad_norm,rng_digest\n";
  for (const TraceRecord& r : trace) {
    out << r.iter << ',' << trace_field(r.generator_mmd2) << ',' << trace_field(r.pd_estimate)
        << ',' << trace_field(r.critic_loss) << ',' << trace_field(r.gan_d_loss) << ','
        << trace_field(r.gan_g_loss) << ',' << trace_field(r.generator_grad_norm) << ','
        << hex64(r.rng_digest) << '\n';
  }
}

RunSummary run_to_directory(const TrainConfig& config, const fs::path& outdir) {
  config.validate();
  fs::create_directories(outdir / "snapshots");
  fs::create_directories(outdir / "checkpoints");
  const std::string started = utc_now();

  RunSummary summary;
  summary.run_id = run_id(config);
  std::vector<TraceRecord> trace;
  std::optional<TrainResult> result;
  try {
    result = train(config, [&](const TraceRecord& r) { trace.push_back(r); });
  } catch (const TrainingError& e) {
    summary.diverged = true;
    summary.reason = e.what();
  }
  summary.iterations_run = static_cast<int>(trace.size());

  std::vector<std::string> artifacts{"trace.csv", "metrics.json"};
  write_trace_csv(outdir / "trace.csv", trace);

  json metrics;
  metrics["run_id"] = summary.run_id;
  metrics["status"] = summary.diverged ? "diverged" : "ok";
  metrics["iterations_run"] = summary.iterations_run;
  if (summary.diverged) metrics["reason"] = summary.reason;

  if (result) {
    const Dataset data = make_dataset(config);
    // Independent of every stream the run itself consumed.
    const Matrix reference = data.sample(
        config.eval_size, substream_seed(config.seed, static_cast<std::uint64_t>(Stream::kEval), 2));
    const GaussianFit data_fit = gaussian_fit(reference);

    json snaps = json::array();
    for (const Snapshot& s : result->snapshots) {
      const std::string stem = snapshot_stem(s.iter);
      const Eigen::Index d = s.data.cols();
      write_csv(outdir / "snapshots" / (stem + "-data.csv"), s.data, column_names("x", d));
      write_csv(outdir / "snapshots" / (stem + "-generated.csv"), s.generated, column_names("x", d));
      artifacts.push_back("snapshots/" + stem + "-data.csv");
      artifacts.push_back("snapshots/" + stem + "-generated.csv");
      if (s.data_projected.size() > 0) {
        const Eigen::Index k = s.data_projected.cols();
        write_csv(outdir / "snapshots" / (stem + "-data-projected.csv"), s.data_projected,
                  column_names("y", k));
        write_csv(outdir / "snapshots" / (stem + "-generated-projected.csv"),
                  s.generated_projected, column_names("y", k));
        artifacts.push_back("snapshots/" + stem + "-data-projected.csv");
        artifacts.push_back("snapshots/" + stem + "-generated-projected.csv");
      }
      json js{{"iter", s.iter}, {"held_out_mmd2", number_or_null(s.held_out_mmd2)}};
      js["frechet"] = number_or_null(frechet_distance(data_fit, gaussian_fit(s.generated)));
      snaps.push_back(js);
    }
    metrics["snapshots"] = snaps;

    const Matrix& samples = result->final_samples;
    summary.final_held_out_mmd2 = held_out_mmd(reference, samples, KernelSpec{{1.0}});
    summary.final_frechet = frechet_distance(data_fit, gaussian_fit(samples));
    json final{{"held_out_mmd2", summary.final_held_out_mmd2},
               {"frechet", number_or_null(summary.final_frechet)}};
    if (is_ring(config)) {
      const ModeReport report = mode_coverage(samples, config.ring);
      summary.modes_captured = report.modes_captured;
      summary.high_quality_fraction = report.high_quality_fraction;
      summary.mean_spread = report.mean_spread;
      final["mode_coverage"] = report;
    }
    metrics["final"] = final;
    write_csv(outdir / "final_samples.csv", samples, column_names("x", samples.cols()));
    artifacts.push_back("final_samples.csv");

    save_params(outdir / "checkpoints" / "generator.params", result->generator);
    artifacts.push_back("checkpoints/generator.params");
    if (!result->critic.empty()) {
      save_params(outdir / "checkpoints" / "critic.params", result->critic);
      artifacts.push_back("checkpoints/critic.params");
    }
  }
  write_text(outdir / "metrics.json", metrics.dump(2) + "\n");

  artifacts.push_back("manifest.json");
  json manifest{{"run_id", summary.run_id},
                {"method", to_string(config.method)},
                {"data", to_string(config.data)},
                {"seed", config.seed},
                {"output_dir", fs::absolute(outdir).lexically_normal().string()},
                {"code_version", GRAMNET_VERSION},
                {"started_at", started},
                {"finished_at", utc_now()},
                {"status", summary.diverged ? "diverged" : "ok"},
                {"init", "kaiming-uniform hidden layers, xavier-uniform output layer, zero biases"},
                {"config", serialize_config(config)},
                {"artifacts", artifacts}};
  if (summary.diverged) manifest["reason"] = summary.reason;
  write_text(outdir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int cmd_train(const TrainCommand& cmd) {
  try {
    const std::string text = cmd.config ? read_text(*cmd.config) : std::string();
    TrainConfig config = parse_config_text(text, cmd.method);
    if (cmd.seed) config.seed = *cmd.seed;
    const fs::path outdir = cmd.out ? fs::path(*cmd.out) : output_root(std::nullopt) / run_id(config);
    const RunSummary s = run_to_directory(config, outdir);
    if (s.diverged) {
      std::cerr << "gramnet train: diverged: " << s.reason << "\n";
      return kExitDiverged;
    }
    std::cout << "wrote " << outdir.string() << " (" << s.iterations_run << " iterations";
    if (s.modes_captured >= 0) std::cout << ", " << s.modes_captured << " modes";
    std::cout << ")\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "gramnet train: " << e.what() << "\n";
    return kExitError;
  }
}

// --- grids -----------------------------------------------------------------------

GridAxis parse_grid_axis(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("grid axis '" + std::string(spec) + "': expected name=v1,v2,...");
  }
  GridAxis axis{std::string(spec.substr(0, eq)), {}};
  static const std::set<std::string> kNames{"h", "critic_hidden", "generator_hidden", "method",
                                            "seed"};
  if (!kNames.contains(axis.name)) {
    throw std::invalid_argument("unknown grid axis '" + axis.name +
                                "' (h, critic_hidden, generator_hidden, method, seed)");
  }
  std::string_view rest = spec.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view v = rest.substr(0, comma);
    if (v.empty()) throw std::invalid_argument("grid axis '" + axis.name + "': empty value");
    axis.values.emplace_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return axis;
}

std::vector<GridAxis> default_grid() {
  return {{"h", {"2", "4", "8", "16"}}, {"critic_hidden", {"20", "100", "200"}}};
}

namespace {

void apply_axis(TrainConfig& c, const std::string& name, const std::string& value) {
  auto positive = [&] {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size() || v < 1) {
      throw std::invalid_argument("grid axis " + name + ": bad value '" + value + "'");
    }
    return v;
  };
  if (name == "h") {
    c.noise.dim = positive();
  } else if (name == "critic_hidden") {
    const int w = positive();
    for (int& h : c.critic_hidden) h = w;
  } else if (name == "generator_hidden") {
    const int w = positive();
    for (int& h : c.generator_hidden) h = w;
  } else if (name == "seed") {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("grid axis seed: bad value '" + value + "'");
    c.seed = s;
  }
}

}  // namespace

std::vector<GridCell> expand_grid(std::string_view config_text, std::optional<Method> method,
                                  std::optional<std::uint64_t> seed,
                                  const std::vector<GridAxis>& axes) {
  std::size_t total = 1;
  for (const GridAxis& a : axes) total *= a.values.size();
  std::vector<GridCell> cells;
  for (std::size_t index = 0; index < total; ++index) {
    GridCell cell;
    std::size_t rem = index;
    std::vector<std::size_t> pick(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      pick[k] = rem % axes[k].values.size();
      rem /= axes[k].values.size();
    }
    std::optional<Method> m = method;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const std::string& v = axes[k].values[pick[k]];
      cell.values.push_back(v);
      cell.name += (k ? "_" : "") + axes[k].name + "-" + v;
      if (axes[k].name == "method") m = method_from_string(v);
    }
    // Re-parse per cell so a method axis picks up that method's defaults.
    cell.config = parse_config_text(config_text, m);
    if (seed) cell.config.seed = *seed;
    for (std::size_t k = 0; k < axes.size(); ++k) apply_axis(cell.config, axes[k].name, cell.values[k]);
    cell.config.validate();
    cells.push_back(std::move(cell));
  }
  return cells;
}

int cmd_grid(const GridCommand& cmd) {
  try {
    const std::string text = cmd.config ? read_text(*cmd.config) : std::string();
    std::vector<GridAxis> axes;
    for (const std::string& s : cmd.axes) axes.push_back(parse_grid_axis(s));
    if (axes.empty()) axes = default_grid();
    const std::vector<GridCell> cells = expand_grid(text, cmd.method, cmd.seed, axes);
    const fs::path root = cmd.out ? fs::path(*cmd.out) : output_root(std::nullopt) / "grid";
    fs::create_directories(root);

    std::vector<RunSummary> summaries(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        summaries[i] = run_to_directory(cells[i].config, root / cells[i].name);
        std::lock_guard<std::mutex> lock(log_mu);
        std::cout << cells[i].name << ": "
                  << (summaries[i].diverged ? "diverged" : "ok");
        if (summaries[i].modes_captured >= 0) std::cout << ", " << summaries[i].modes_captured << " modes";
        std::cout << "\n";
      }
    };
    const int n = std::max(1, std::min<int>(cmd.parallel, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ofstream out(root / "summary.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (root / "summary.csv").string());
    out << "cell";
    for (const GridAxis& a : axes) out << ',' << a.name;
    out << ",status,iterations_run,modes_captured,high_quality_fraction,mean_spread,"
           "final_held_out_mmd2,final_frechet\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const RunSummary& s = summaries[i];
      out << cells[i].name;
      for (const std::string& v : cells[i].values) out << ',' << v;
      out << ',' << (s.diverged ? "diverged" : "ok") << ',' << s.iterations_run << ','
          << s.modes_captured << ',' << format_double(s.high_quality_fraction) << ','
          << format_double(s.mean_spread) << ',' << format_double(s.final_held_out_mmd2) << ','
          << format_double(s.final_frechet) << '\n';
    }
    std::cout << "wrote " << (root / "summary.csv").string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "gramnet grid: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace gramnet
