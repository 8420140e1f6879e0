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

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gramnet/cli.h"

namespace gramnet {

ConfigError::ConfigError(int line, std::string key, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (key.empty() ? std::string() : key + ": ") + message),
      line_(line),
      key_(std::move(key)) {}

namespace {

struct Entry {
  int line = 0;
  std::string key;  // section.name
  std::string value;
  bool is_list = false;
  std::vector<std::string> items;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view s, int line, const std::string& key) {
  if (s.size() >= 2 && s.front() == '"') {
    if (s.back() != '"') throw ConfigError(line, key, "unterminated string");
    return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

// Drops a '#' comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::vector<Entry> tokenize(std::string_view text) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "", "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(line_no, "", "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, "", "expected 'key = value'");
    }
    const std::string name(trim(line.substr(0, eq)));
    if (name.empty()) throw ConfigError(line_no, "", "missing key before '='");
    if (section.empty()) throw ConfigError(line_no, name, "key outside of any [section]");
    Entry e;
    e.line = line_no;
    e.key = section + "." + name;
    if (!seen.insert(e.key).second) throw ConfigError(line_no, e.key, "duplicate key");
    std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(line_no, e.key, "missing value");
    if (value.front() == '[') {
      if (value.back() != ']') throw ConfigError(line_no, e.key, "unterminated list");
      e.is_list = true;
      std::string_view body = trim(value.substr(1, value.size() - 2));
      while (!body.empty()) {
        const auto comma = body.find(',');
        const std::string_view item = trim(body.substr(0, comma));
        if (item.empty()) throw ConfigError(line_no, e.key, "empty list item");
        e.items.push_back(unquote(item, line_no, e.key));
        if (comma == std::string_view::npos) break;
        body = body.substr(comma + 1);
        if (trim(body).empty()) throw ConfigError(line_no, e.key, "trailing comma in list");
      }
    } else {
      e.value = unquote(value, line_no, e.key);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

long long parse_int(const std::string& s, int line, const std::string& key) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(line, key, "expected an integer, got '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, int line, const std::string& key) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(line, key, "expected a number, got '" + s + "'");
  }
  return v;
}

int parse_int32(const std::string& s, int line, const std::string& key) {
  const long long v = parse_int(s, line, key);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(line, key, "out of range");
  return static_cast<int>(v);
}

class Applier {
 public:
  explicit Applier(TrainConfig& c) : c_(c) {
    scalar("run.data", [this](const std::string& v) { c_.data = data_kind_from_string(v); });
    scalar("run.seed", [this](const std::string& v) {
      const long long s = parse_int(v, line_, key_);
      if (s < 0) throw std::invalid_argument("seed must be >= 0");
      c_.seed = static_cast<std::uint64_t>(s);
    });
    integer("run.iterations", &c_.iterations);
    integer("run.batch_data", &c_.batch_data);
    integer("run.batch_generated", &c_.batch_generated);
    integer("run.eval_size", &c_.eval_size);
    integer("run.snapshot_size", &c_.snapshot_size);
    integer("run.snapshot_every", &c_.snapshot_every);

    integer("ring.n_modes", &c_.ring.n_modes);
    real("ring.mode_std", &c_.ring.mode_std);
    real("ring.radius", &c_.ring.radius);
    real("ring.rotation_deg_axis2", &c_.ring.rotation_deg_axis2);
    real("ring.third_dim_std", &c_.ring.third_dim_std);
    scalar("mnist.images", [this](const std::string& v) { c_.mnist_images = v; });
    scalar("mnist.labels", [this](const std::string& v) { c_.mnist_labels = v; });

    integer("noise.dim", &c_.noise.dim);
    scalar("noise.family", [this](const std::string& v) { c_.noise.family = noise_family_from_string(v); });

    int_list("generator.hidden", &c_.generator_hidden);
    scalar("generator.output_activation",
           [this](const std::string& v) { c_.generator_output = activation_from_string(v); });
    optimizer("generator", &c_.generator_optimizer);

    int_list("critic.hidden", &c_.critic_hidden);
    integer("critic.projected_dim", &c_.projected_dim);
    optimizer("critic", &c_.critic_optimizer);
    real("critic.lambda", &c_.critic.lambda);
    real("critic.ridge", &c_.critic.ridge);
    scalar("critic.positivity", [this](const std::string& v) {
      if (v == "penalty") {
        c_.critic.positivity = PositivityMode::kPenalty;
      } else if (v == "clip") {
        c_.critic.positivity = PositivityMode::kClip;
      } else {
        throw std::invalid_argument("expected 'penalty' or 'clip', got '" + v + "'");
      }
    });

    list("kernel.bandwidths", [this](const std::vector<std::string>& items) {
      std::vector<double> b;
      for (const auto& s : items) b.push_back(parse_real(s, line_, key_));
      c_.kernel.bandwidths = std::move(b);
    });
  }

  bool known(const std::string& key) const {
    return key == "run.method" || scalars_.contains(key) || lists_.contains(key);
  }

  void apply(const Entry& e) {
    line_ = e.line;
    key_ = e.key;
    try {
      if (auto it = scalars_.find(e.key); it != scalars_.end()) {
        if (e.is_list) throw ConfigError(e.line, e.key, "expected a scalar, got a list");
        it->second(e.value);
      } else if (auto jt = lists_.find(e.key); jt != lists_.end()) {
        if (!e.is_list) throw ConfigError(e.line, e.key, "expected a list like [a, b]");
        jt->second(e.items);
      } else {
        throw ConfigError(e.line, e.key, "unknown key");
      }
      validate_section(e.key.substr(0, e.key.find('.')));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(e.line, e.key, ex.what());
    }
  }

 private:
  using Scalar = std::function<void(const std::string&)>;
  using List = std::function<void(const std::vector<std::string>&)>;

  void scalar(const std::string& key, Scalar fn) { scalars_[key] = std::move(fn); }
  void list(const std::string& key, List fn) { lists_[key] = std::move(fn); }
  void integer(const std::string& key, int* field) {
    scalar(key, [this, field](const std::string& v) { *field = parse_int32(v, line_, key_); });
  }
  void real(const std::string& key, double* field) {
    scalar(key, [this, field](const std::string& v) { *field = parse_real(v, line_, key_); });
  }
  void int_list(const std::string& key, std::vector<int>* field) {
    list(key, [this, field](const std::vector<std::string>& items) {
      std::vector<int> v;
      for (const auto& s : items) v.push_back(parse_int32(s, line_, key_));
      *field = std::move(v);
    });
  }
  void optimizer(const std::string& section, OptimizerConfig* o) {
    // The kind itself is applied before every other key (see parse_config_text).
    scalar(section + ".optimizer", [](const std::string&) {});
    real(section + ".learning_rate", &o->learning_rate);
    real(section + ".beta1", &o->beta1);
    real(section + ".beta2", &o->beta2);
    real(section + ".epsilon", &o->epsilon);
  }

  void validate_section(const std::string& section) const {
    if (section == "ring") c_.ring.validate();
    if (section == "noise") c_.noise.validate();
    if (section == "kernel") c_.kernel.validate();
    if (section == "generator") c_.generator_optimizer.validate();
    if (section == "critic") {
      c_.critic_optimizer.validate();
      c_.critic.validate();
    }
  }

  TrainConfig& c_;
  std::map<std::string, Scalar> scalars_;
  std::map<std::string, List> lists_;
  int line_ = 0;
  std::string key_;
};

OptimizerConfig optimizer_defaults(OptimizerKind kind, double lr) {
  return kind == OptimizerKind::kAdam ? OptimizerConfig::adam(lr) : OptimizerConfig::rmsprop(lr);
}

std::string join_ints(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TrainConfig parse_config_text(std::string_view text, std::optional<Method> method) {
  const std::vector<Entry> entries = tokenize(text);
  auto find = [&](const std::string& key) -> const Entry* {
    for (const Entry& e : entries) {
      if (e.key == key) return &e;
    }
    return nullptr;
  };

  if (!method) {
    method = Method::kGram;
    if (const Entry* e = find("run.method")) {
      try {
        method = method_from_string(e->value);
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(e->line, e->key, ex.what());
      }
    }
  }
  TrainConfig c = TrainConfig::defaults(*method);
  if (const Entry* e = find("run.data")) {
    try {
      if (data_kind_from_string(e->value) == DataKind::kRing3d) c.ring = RingSpec::ring3d();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(e->line, e->key, ex.what());
    }
  }
  // Switching optimizer kind resets its constants to that kind's defaults;
  // explicit keys below override them.
  for (auto [section, opt] : {std::pair{"generator", &c.generator_optimizer},
                              std::pair{"critic", &c.critic_optimizer}}) {
    if (const Entry* e = find(std::string(section) + ".optimizer")) {
      try {
        *opt = optimizer_defaults(optimizer_from_string(e->value), opt->learning_rate);
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(e->line, e->key, ex.what());
      }
    }
  }

  Applier applier(c);
  for (const Entry& e : entries) {
    if (!applier.known(e.key)) throw ConfigError(e.line, e.key, "unknown key");
    if (e.key == "run.method") continue;
    applier.apply(e);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(0, "", ex.what());
  }
  return c;
}

TrainConfig parse_config(const std::filesystem::path& path, std::optional<Method> method) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str(), method);
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), e.key(), path.string() + ": " + e.what());
  }
}

std::string serialize_config(const TrainConfig& c) {
  std::ostringstream out;
  auto opt = [&](const OptimizerConfig& o) {
    out << "optimizer = " << to_string(o.kind) << '\n'
        << "learning_rate = " << format_double(o.learning_rate) << '\n'
        << "beta1 = " << format_double(o.beta1) << '\n'
        << "beta2 = " << format_double(o.beta2) << '\n'
        << "epsilon = " << format_double(o.epsilon) << '\n';
  };
  out << "[run]\n"
      << "method = " << to_string(c.method) << '\n'
      << "data = " << to_string(c.data) << '\n'
      << "seed = " << c.seed << '\n'
      << "iterations = " << c.iterations << '\n'
      << "batch_data = " << c.batch_data << '\n'
      << "batch_generated = " << c.batch_generated << '\n'
      << "eval_size = " << c.eval_size << '\n'
      << "snapshot_size = " << c.snapshot_size << '\n'
      << "snapshot_every = " << c.snapshot_every << '\n';
  out << "\n[ring]\n"
      << "n_modes = " << c.ring.n_modes << '\n'
      << "mode_std = " << format_double(c.ring.mode_std) << '\n'
      << "radius = " << format_double(c.ring.radius) << '\n'
      << "rotation_deg_axis2 = " << format_double(c.ring.rotation_deg_axis2) << '\n'
      << "third_dim_std = " << format_double(c.ring.third_dim_std) << '\n';
  if (!c.mnist_images.empty() || !c.mnist_labels.empty()) {
    out << "\n[mnist]\n"
        << "images = " << quoted(c.mnist_images) << '\n'
        << "labels = " << quoted(c.mnist_labels) << '\n';
  }
  out << "\n[noise]\n"
      << "dim = " << c.noise.dim << '\n'
      << "family = " << to_string(c.noise.family) << '\n';
  out << "\n[generator]\n"
      << "hidden = " << join_ints(c.generator_hidden) << '\n'
      << "output_activation = " << to_string(c.generator_output) << '\n';
  opt(c.generator_optimizer);
  out << "\n[critic]\n"
      << "hidden = " << join_ints(c.critic_hidden) << '\n'
      << "projected_dim = " << c.projected_dim << '\n';
  opt(c.critic_optimizer);
  out << "lambda = " << format_double(c.critic.lambda) << '\n'
      << "positivity = " << (c.critic.positivity == PositivityMode::kClip ? "clip" : "penalty")
      << '\n'
      << "ridge = " << format_double(c.critic.ridge) << '\n';
  out << "\n[kernel]\nbandwidths = [";
  for (std::size_t i = 0; i < c.kernel.bandwidths.size(); ++i) {
    out << (i ? ", " : "") << format_double(c.kernel.bandwidths[i]);
  }
  out << "]\n";
  return out.str();
}

}  // namespace gramnet
