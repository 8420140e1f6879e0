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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <regex>

#include "gramnet/cli.h"

namespace gramnet {
namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Pads by 5% and widens degenerate ranges to unit width.
  void finish() {
    if (!(lo <= hi)) lo = -1.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) + "\" height=\"" +
         fixed(kHeight) + "\" viewBox=\"0 0 " + fixed(kWidth) + " " + fixed(kHeight) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + fixed(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n" + "<rect x=\"" + fixed(kMargin) + "\" y=\"" + fixed(kMargin) +
         "\" width=\"" + fixed(kWidth - 2 * kMargin) + "\" height=\"" +
         fixed(kHeight - 2 * kMargin) + "\" fill=\"none\" stroke=\"#888\"/>\n";
}

}  // namespace

std::string scatter_svg(const Matrix& data, const Matrix& generated, const std::string& title) {
  if (data.cols() < 2 && data.size() > 0) throw ShapeError("scatter_svg: data needs 2 columns");
  if (generated.cols() < 2 && generated.size() > 0) {
    throw ShapeError("scatter_svg: generated needs 2 columns");
  }
  Range x, y;
  for (const Matrix* m : {&data, &generated}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      x.add((*m)(i, 0));
      y.add((*m)(i, 1));
    }
  }
  x.finish();
  y.finish();
  std::string svg = header(title);
  auto marks = [&](const Matrix& m, const char* cls, const char* color) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, 0)) || !std::isfinite(m(i, 1))) continue;
      svg += "<circle class=\"" + std::string(cls) + "\" cx=\"" +
             fixed(x.map(m(i, 0), kMargin, kWidth - kMargin)) + "\" cy=\"" +
             fixed(y.map(m(i, 1), kHeight - kMargin, kMargin)) + "\" r=\"2\" fill=\"" + color +
             "\" fill-opacity=\"0.6\"/>\n";
    }
  };
  marks(data, "data", "#1f77b4");
  marks(generated, "gen", "#ff7f0e");
  svg += "<text x=\"" + fixed(kMargin) + "\" y=\"" + fixed(kHeight - 12) +
         "\" font-size=\"11\" fill=\"#1f77b4\">data</text>\n";
  svg += "<text x=\"" + fixed(kMargin + 50) + "\" y=\"" + fixed(kHeight - 12) +
         "\" font-size=\"11\" fill=\"#ff7f0e\">generated</text>\n";
  return svg + "</svg>\n";
}

std::string trace_svg(const CsvTable& trace) {
  if (trace.cells.empty()) throw std::runtime_error("trace has no records");
  static const char* kSeries[] = {"generator_mmd2", "pd_estimate", "critic_loss", "gan_d_loss",
                                  "gan_g_loss"};
  static const char* kColors[] = {"#ff7f0e", "#1f77b4", "#2ca02c", "#d62728", "#9467bd"};
  const std::vector<double> iters = trace.column("iter");

  struct Series {
    std::string name;
    const char* color;
    std::vector<std::pair<double, double>> points;  // (iter, log10 value)
  };
  std::vector<Series> series;
  Range x, y;
  for (std::size_t s = 0; s < std::size(kSeries); ++s) {
    if (std::find(trace.header.begin(), trace.header.end(), kSeries[s]) == trace.header.end()) {
      continue;
    }
    Series ser{kSeries[s], kColors[s], {}};
    const std::vector<double> v = trace.column(kSeries[s]);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) continue;
      ser.points.emplace_back(iters[i], std::log10(v[i]));
      x.add(iters[i]);
      y.add(std::log10(v[i]));
    }
    if (!ser.points.empty()) series.push_back(std::move(ser));
  }
  x.finish();
  y.finish();

  std::string svg = header("loss trace (log10 scale)");
  for (int p = static_cast<int>(std::ceil(y.lo)); p <= static_cast<int>(std::floor(y.hi)); ++p) {
    const double py = y.map(p, kHeight - kMargin, kMargin);
    svg += "<line x1=\"" + fixed(kMargin) + "\" y1=\"" + fixed(py) + "\" x2=\"" +
           fixed(kWidth - kMargin) + "\" y2=\"" + fixed(py) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fixed(kMargin - 4) + "\" y=\"" + fixed(py + 4) +
           "\" text-anchor=\"end\" font-size=\"10\">1e" + std::to_string(p) + "</text>\n";
  }
  double legend_y = kMargin + 14;
  for (const Series& s : series) {
    svg += "<polyline class=\"series\" data-name=\"" + s.name + "\" fill=\"none\" stroke=\"" +
           s.color + "\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      svg += (i ? " " : "") + fixed(x.map(s.points[i].first, kMargin, kWidth - kMargin)) + "," +
             fixed(y.map(s.points[i].second, kHeight - kMargin, kMargin));
    }
    svg += "\"/>\n";
    svg += "<text x=\"" + fixed(kWidth - kMargin - 4) + "\" y=\"" + fixed(legend_y) +
           "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + s.color + "\">" + s.name +
           "</text>\n";
    legend_y += 14;
  }
  svg += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"" + fixed(kHeight - 12) +
         "\" text-anchor=\"middle\" font-size=\"11\">iteration</text>\n";
  return svg + "</svg>\n";
}

namespace {

void write_svg(const fs::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg;
}

}  // namespace

int cmd_plot(const fs::path& run_dir) {
  try {
    const CsvTable trace = read_csv(run_dir / "trace.csv");
    const fs::path plots = run_dir / "plots";
    fs::create_directories(plots);
    write_svg(plots / "trace.svg", trace_svg(trace));
    int written = 1;

    std::vector<std::string> stems;
    const std::regex data_file(R"((iter-\d+)-data\.csv)");
    if (fs::is_directory(run_dir / "snapshots")) {
      for (const auto& entry : fs::directory_iterator(run_dir / "snapshots")) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, data_file)) stems.push_back(m[1]);
      }
    }
    std::sort(stems.begin(), stems.end());
    for (const std::string& stem : stems) {
      const fs::path dir = run_dir / "snapshots";
      const Matrix data = read_csv(dir / (stem + "-data.csv")).numeric();
      const Matrix gen = read_csv(dir / (stem + "-generated.csv")).numeric();
      write_svg(plots / (stem + ".svg"), scatter_svg(data, gen, stem + " original space"));
      ++written;
      if (fs::exists(dir / (stem + "-data-projected.csv"))) {
        const Matrix dp = read_csv(dir / (stem + "-data-projected.csv")).numeric();
        const Matrix gp = read_csv(dir / (stem + "-generated-projected.csv")).numeric();
        if (dp.cols() >= 2) {
          write_svg(plots / (stem + "-projected.svg"),
                    scatter_svg(dp, gp, stem + " projected space"));
          ++written;
        }
      }
    }
    std::cout << "wrote " << written << " plot(s) to " << plots.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "gramnet plot: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace gramnet
