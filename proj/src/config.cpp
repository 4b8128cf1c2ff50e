/*
 * Copyright 2026 The KickSense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "kicksense/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

namespace {

using Cfg = ExperimentConfig;

struct Field {
  std::string key;
  std::function<std::string(const Cfg&)> get;
  std::function<void(Cfg&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  fail(ErrorCode::Config, "config " + key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(trim(v));
  } catch (const Error&) {
    bad_value(key, v, "expected a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return parse_int(trim(v));
  } catch (const Error&) {
    bad_value(key, v, "expected an integer");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 0) bad_value(key, v, "must be >= 0");
  return static_cast<std::size_t>(n);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const auto t = std::string(trim(v));
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    bad_value(key, v, "expected an unsigned integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  bad_value(key, v, "expected true or false");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : split(v, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

template <typename R>
Field dbl(std::string key, R ref) {
  return {key, [ref](const Cfg& c) { return format_double(ref(const_cast<Cfg&>(c))); },
          [ref, key](Cfg& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

template <typename R>
Field size(std::string key, R ref) {
  return {key, [ref](const Cfg& c) { return std::to_string(ref(const_cast<Cfg&>(c))); },
          [ref, key](Cfg& c, const std::string& v) { ref(c) = to_size(key, v); }};
}

template <typename R>
Field u64(std::string key, R ref) {
  return {key, [ref](const Cfg& c) { return std::to_string(ref(const_cast<Cfg&>(c))); },
          [ref, key](Cfg& c, const std::string& v) { ref(c) = to_u64(key, v); }};
}

template <typename R>
Field text(std::string key, R ref) {
  return {key, [ref](const Cfg& c) { return ref(const_cast<Cfg&>(c)); },
          [ref](Cfg& c, const std::string& v) { ref(c) = std::string(trim(v)); }};
}

std::string transition_text(const StreamScenario& s) {
  return pattern_name(s.from) + ">" + pattern_name(s.to);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    // paths
    f.push_back(text("paths.output_root", [](Cfg& c) -> std::string& { return c.paths.output_root; }));
    f.push_back(text("paths.dataset_dir", [](Cfg& c) -> std::string& { return c.paths.dataset_dir; }));
    f.push_back(text("paths.manifest", [](Cfg& c) -> std::string& { return c.paths.manifest; }));
    f.push_back(text("paths.checkpoint", [](Cfg& c) -> std::string& { return c.paths.checkpoint; }));
    f.push_back(text("paths.report_dir", [](Cfg& c) -> std::string& { return c.paths.report_dir; }));
    // simulator
    f.push_back(dbl("simulate.sample_rate_hz", [](Cfg& c) -> double& { return c.build.sim.sample_rate_hz; }));
    f.push_back(dbl("simulate.noise_std_pa", [](Cfg& c) -> double& { return c.build.sim.noise_std_pa; }));
    f.push_back(dbl("simulate.decay_length_m", [](Cfg& c) -> double& { return c.build.sim.decay_length_m; }));
    f.push_back(dbl("simulate.source_strength", [](Cfg& c) -> double& { return c.build.sim.source_strength; }));
    f.push_back(dbl("simulate.reference_frequency_hz", [](Cfg& c) -> double& { return c.build.sim.reference_frequency_hz; }));
    f.push_back(dbl("simulate.lateral_speed_mm_per_min", [](Cfg& c) -> double& { return c.build.sim.lateral_speed_mm_per_min; }));
    f.push_back(dbl("simulate.amplitude_m", [](Cfg& c) -> double& { return c.build.sim.amplitude_m; }));
    f.push_back(dbl("simulate.leg_spacing_m", [](Cfg& c) -> double& { return c.build.sim.leg_spacing_m; }));
    f.push_back(dbl("simulate.wave_speed_m_s", [](Cfg& c) -> double& { return c.build.sim.wave_speed_m_s; }));
    f.push_back(dbl("simulate.rest_duration_s", [](Cfg& c) -> double& { return c.build.sim.rest_duration_s; }));
    f.push_back(dbl("simulate.static_pressure_pa", [](Cfg& c) -> double& { return c.build.sim.static_pressure_pa; }));
    f.push_back(size("simulate.repetitions", [](Cfg& c) -> std::size_t& {
      static thread_local std::size_t tmp;
      tmp = static_cast<std::size_t>(c.build.repetitions);
      return tmp;
    }));
    f.back().set = [](Cfg& c, const std::string& v) {
      const auto n = to_int("simulate.repetitions", v);
      if (n < 1 || n > 1000) bad_value("simulate.repetitions", v, "must be in [1, 1000]");
      c.build.repetitions = static_cast<int>(n);
    };
    f.push_back(u64("simulate.seed", [](Cfg& c) -> std::uint64_t& { return c.build.seed; }));
    f.push_back({"simulate.patterns",
                 [](const Cfg& c) { return join(c.build.patterns, [](PatternId p) { return pattern_name(p); }); },
                 [](Cfg& c, const std::string& v) {
                   std::vector<PatternId> out;
                   try {
                     for (const auto& s : to_list(v)) out.push_back(parse_pattern_name(s));
                   } catch (const Error& e) {
                     bad_value("simulate.patterns", v, e.what());
                   }
                   if (out.empty()) bad_value("simulate.patterns", v, "needs at least one pattern");
                   c.build.patterns = out;
                 }});
    f.push_back({"simulate.l_y_levels_mm",
                 [](const Cfg& c) { return join(c.build.l_y_levels, [](double d) { return format_double(d); }); },
                 [](Cfg& c, const std::string& v) {
                   std::vector<double> out;
                   for (const auto& s : to_list(v)) out.push_back(to_double("simulate.l_y_levels_mm", s));
                   if (out.empty()) bad_value("simulate.l_y_levels_mm", v, "needs at least one level");
                   c.build.l_y_levels = out;
                 }});
    // geometry
    f.push_back({"geometry.angular_positions_rad",
                 [](const Cfg& c) {
                   return join(c.build.geometry.angular_positions, [](double d) { return format_double(d); });
                 },
                 [](Cfg& c, const std::string& v) {
                   std::vector<double> out;
                   for (const auto& s : to_list(v)) out.push_back(to_double("geometry.angular_positions_rad", s));
                   c.build.geometry.angular_positions = out;
                 }});
    f.push_back(dbl("geometry.cylinder_radius_m", [](Cfg& c) -> double& { return c.build.geometry.cylinder_radius_m; }));
    f.push_back(dbl("geometry.sensor_depth_offset_m", [](Cfg& c) -> double& { return c.build.geometry.sensor_depth_offset_m; }));
    // dataset
    f.push_back(size("dataset.window_len", [](Cfg& c) -> std::size_t& { return c.build.windowing.window_len; }));
    f.push_back(size("dataset.stride", [](Cfg& c) -> std::size_t& { return c.build.windowing.stride; }));
    f.push_back({"dataset.clip_to_effective_region",
                 [](const Cfg& c) { return std::string(c.build.windowing.clip_to_effective_region ? "true" : "false"); },
                 [](Cfg& c, const std::string& v) {
                   c.build.windowing.clip_to_effective_region = to_bool("dataset.clip_to_effective_region", v);
                 }});
    f.push_back(u64("dataset.split_seed", [](Cfg& c) -> std::uint64_t& { return c.split_seed; }));
    f.push_back(dbl("dataset.split_train", [](Cfg& c) -> double& { return c.split.train; }));
    f.push_back(dbl("dataset.split_val", [](Cfg& c) -> double& { return c.split.val; }));
    f.push_back(dbl("dataset.split_test", [](Cfg& c) -> double& { return c.split.test; }));
    // architecture
    f.push_back(size("model.conv1_channels", [](Cfg& c) -> std::size_t& { return c.arch.conv1_channels; }));
    f.push_back(size("model.conv2_channels", [](Cfg& c) -> std::size_t& { return c.arch.conv2_channels; }));
    f.push_back(size("model.conv_kernel", [](Cfg& c) -> std::size_t& { return c.arch.conv_kernel; }));
    f.push_back(size("model.conv2_stride", [](Cfg& c) -> std::size_t& { return c.arch.conv2_stride; }));
    f.push_back(size("model.lstm_hidden", [](Cfg& c) -> std::size_t& { return c.arch.lstm_hidden; }));
    f.push_back(size("model.conv2d1_channels", [](Cfg& c) -> std::size_t& { return c.arch.conv2d1_channels; }));
    f.push_back(size("model.conv2d2_channels", [](Cfg& c) -> std::size_t& { return c.arch.conv2d2_channels; }));
    f.push_back(size("model.freq_features", [](Cfg& c) -> std::size_t& { return c.arch.freq_features; }));
    f.push_back(dbl("model.dropout", [](Cfg& c) -> double& { return c.arch.dropout; }));
    f.push_back(size("model.fft_size", [](Cfg& c) -> std::size_t& { return c.arch.fft_size; }));
    f.push_back(size("model.hop", [](Cfg& c) -> std::size_t& { return c.arch.hop; }));
    f.push_back(dbl("model.compression_pa", [](Cfg& c) -> double& { return c.arch.compression_pa; }));
    f.push_back(size("model.mlp_hidden", [](Cfg& c) -> std::size_t& { return c.arch.mlp_hidden; }));
    // training
    f.push_back({"train.task", [](const Cfg& c) { return std::string(task_name(c.task)); },
                 [](Cfg& c, const std::string& v) { c.task = parse_task(std::string(trim(v))); }});
    f.push_back({"train.variant", [](const Cfg& c) { return std::string(variant_name(c.variant)); },
                 [](Cfg& c, const std::string& v) { c.variant = parse_variant(std::string(trim(v))); }});
    f.push_back(size("train.epochs", [](Cfg& c) -> std::size_t& { return c.train.epochs; }));
    f.push_back(size("train.steps", [](Cfg& c) -> std::size_t& { return c.train.steps; }));
    f.push_back(size("train.batch_size", [](Cfg& c) -> std::size_t& { return c.train.batch_size; }));
    f.push_back(dbl("train.learning_rate", [](Cfg& c) -> double& { return c.train.learning_rate; }));
    f.push_back(dbl("train.lr_gamma", [](Cfg& c) -> double& { return c.train.lr_gamma; }));
    f.push_back(size("train.decay_epochs", [](Cfg& c) -> std::size_t& { return c.train.decay_epochs; }));
    f.push_back(size("train.decay_steps", [](Cfg& c) -> std::size_t& { return c.train.decay_steps; }));
    f.push_back({"train.optimizer",
                 [](const Cfg& c) { return std::string(c.train.optimizer == nn::OptimizerKind::Adam ? "adam" : "sgd"); },
                 [](Cfg& c, const std::string& v) {
                   const auto t = trim(v);
                   if (t == "adam") c.train.optimizer = nn::OptimizerKind::Adam;
                   else if (t == "sgd") c.train.optimizer = nn::OptimizerKind::Sgd;
                   else bad_value("train.optimizer", v, "expected adam or sgd");
                 }});
    f.push_back(u64("train.seed", [](Cfg& c) -> std::uint64_t& { return c.train.seed; }));
    f.push_back(size("train.max_windows_per_epoch", [](Cfg& c) -> std::size_t& { return c.train.max_windows_per_epoch; }));
    f.push_back(size("train.log_every_steps", [](Cfg& c) -> std::size_t& { return c.train.log_every_steps; }));
    f.push_back(size("train.val_max_windows", [](Cfg& c) -> std::size_t& { return c.train.val_max_windows; }));
    // ablation
    f.push_back({"ablate.seeds",
                 [](const Cfg& c) { return join(c.ablate.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
                 [](Cfg& c, const std::string& v) {
                   std::vector<std::uint64_t> out;
                   for (const auto& s : to_list(v)) out.push_back(to_u64("ablate.seeds", s));
                   if (out.empty()) bad_value("ablate.seeds", v, "needs at least one seed");
                   c.ablate.seeds = out;
                 }});
    f.push_back({"ablate.variants",
                 [](const Cfg& c) { return join(c.ablate.variants, [](Variant x) { return std::string(variant_name(x)); }); },
                 [](Cfg& c, const std::string& v) {
                   std::vector<Variant> out;
                   for (const auto& s : to_list(v)) out.push_back(parse_variant(s));
                   if (out.empty()) bad_value("ablate.variants", v, "needs at least one variant");
                   c.ablate.variants = out;
                 }});
    f.push_back({"ablate.tasks",
                 [](const Cfg& c) {
                   std::vector<std::string> t;
                   if (c.ablate.classify) t.push_back("classify");
                   if (c.ablate.localize) t.push_back("localize");
                   return join(t, [](const std::string& s) { return s; });
                 },
                 [](Cfg& c, const std::string& v) {
                   c.ablate.classify = c.ablate.localize = false;
                   for (const auto& s : to_list(v)) {
                     (parse_task(s) == Task::Classify ? c.ablate.classify : c.ablate.localize) = true;
                   }
                   if (!c.ablate.classify && !c.ablate.localize) bad_value("ablate.tasks", v, "needs a task");
                 }});
    // streaming
    f.push_back({"stream.transitions",
                 [](const Cfg& c) { return join(c.stream.transitions, transition_text); },
                 [](Cfg& c, const std::string& v) {
                   const double sw = c.stream.transitions.empty() ? 12.0 : c.stream.transitions[0].switch_time_s;
                   const double du = c.stream.transitions.empty() ? 24.0 : c.stream.transitions[0].duration_s;
                   std::vector<StreamScenario> out;
                   for (const auto& s : to_list(v)) {
                     const auto pos = s.find('>');
                     if (pos == std::string::npos) bad_value("stream.transitions", v, "expected from>to pairs");
                     StreamScenario sc;
                     try {
                       sc.from = parse_pattern_name(std::string(trim(s.substr(0, pos))));
                       sc.to = parse_pattern_name(std::string(trim(s.substr(pos + 1))));
                     } catch (const Error& e) {
                       bad_value("stream.transitions", v, e.what());
                     }
                     sc.switch_time_s = sw;
                     sc.duration_s = du;
                     out.push_back(sc);
                   }
                   if (out.empty()) bad_value("stream.transitions", v, "needs at least one transition");
                   c.stream.transitions = out;
                 }});
    f.push_back({"stream.switch_time_s",
                 [](const Cfg& c) { return format_double(c.stream.transitions.front().switch_time_s); },
                 [](Cfg& c, const std::string& v) {
                   const double t = to_double("stream.switch_time_s", v);
                   for (auto& s : c.stream.transitions) s.switch_time_s = t;
                 }});
    f.push_back({"stream.duration_s",
                 [](const Cfg& c) { return format_double(c.stream.transitions.front().duration_s); },
                 [](Cfg& c, const std::string& v) {
                   const double t = to_double("stream.duration_s", v);
                   for (auto& s : c.stream.transitions) s.duration_s = t;
                 }});
    f.push_back(dbl("stream.l_x_mm", [](Cfg& c) -> double& { return c.stream.options.l_x_mm; }));
    f.push_back(dbl("stream.l_y_mm", [](Cfg& c) -> double& { return c.stream.options.l_y_mm; }));
    f.push_back(dbl("stream.noise_std_pa", [](Cfg& c) -> double& { return c.stream.options.sim.noise_std_pa; }));
    f.push_back(size("stream.consecutive", [](Cfg& c) -> std::size_t& { return c.stream.options.consecutive; }));
    f.push_back(u64("stream.seed", [](Cfg& c) -> std::uint64_t& { return c.stream.options.seed; }));
    // evaluation
    f.push_back(dbl("eval.band_mm", [](Cfg& c) -> double& { return c.band_mm; }));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  fail(ErrorCode::Config, "unknown config key '" + key + "'");
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  try {
    field(key).set(*this, value);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, "config " + key + ": " + e.what());
  }
}

std::string ExperimentConfig::get(const std::string& key) const { return field(key).get(*this); }

std::vector<std::string> ExperimentConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

KvFile ExperimentConfig::to_kv() const {
  KvFile kv;
  for (const auto& f : fields()) kv.set(f.key, f.get(*this));
  return kv;
}

std::string ExperimentConfig::dump() const {
  std::ostringstream out;
  to_kv().write(out);
  return out.str();
}

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : kv.entries()) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  KvFile kv;
  try {
    kv = KvFile::load(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(ErrorCode::Config, e.what());
  }
  return from_kv(kv);
}

void ExperimentConfig::validate() const {
  auto wrap = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, std::string(what) + ": " + e.what());
    }
  };
  wrap("simulate", [&] { build.sim.validate(); });
  wrap("geometry", [&] { build.geometry.validate(); });
  wrap("model", [&] { arch.validate(); });
  wrap("train", [&] { train.validate(); });
  require(!paths.output_root.empty(), ErrorCode::Config, "paths.output_root must not be empty");
  require(!paths.dataset_dir.empty(), ErrorCode::Config, "paths.dataset_dir must not be empty");
  require(!paths.report_dir.empty(), ErrorCode::Config, "paths.report_dir must not be empty");
  for (double l : build.l_y_levels) {
    const double level = l / 20.0;
    require(level >= 1.0 && level <= 10.0 && level == std::round(level), ErrorCode::Config,
            "simulate.l_y_levels_mm must be drawn from 20, 40, ..., 200");
  }
  require(build.windowing.window_len == arch.window_len, ErrorCode::Config,
          "dataset.window_len must equal the model window length (" +
              std::to_string(arch.window_len) + ")");
  require(build.windowing.stride >= 1, ErrorCode::Config, "dataset.stride must be >= 1");
  require(build.geometry.sensor_count() == arch.sensors, ErrorCode::Config,
          "geometry must have " + std::to_string(arch.sensors) + " sensors");
  require(split.train >= 0 && split.val >= 0 && split.test >= 0 &&
              std::abs(split.train + split.val + split.test - 1.0) < 1e-9,
          ErrorCode::Config, "dataset split fractions must be non-negative and sum to 1");
  require(train.epochs >= 1 && train.steps >= 1, ErrorCode::Config,
          "train.epochs and train.steps must be >= 1");
  require(band_mm >= 0.0, ErrorCode::Config, "eval.band_mm must be >= 0");
  require(!stream.transitions.empty(), ErrorCode::Config, "stream.transitions is empty");
  const auto& s0 = stream.transitions.front();
  require(s0.switch_time_s >= 0.0 && s0.duration_s > s0.switch_time_s, ErrorCode::Config,
          "stream.switch_time_s must lie inside stream.duration_s");
  require(stream.options.consecutive >= 1, ErrorCode::Config, "stream.consecutive must be >= 1");
  require(stream.options.sim.noise_std_pa >= 0.0, ErrorCode::Config,
          "stream.noise_std_pa must be >= 0");
}

std::string ExperimentConfig::output_root() const {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? std::string(env) : paths.output_root;
}

std::string ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(output_root()) / p).string();
}

std::string ExperimentConfig::dataset_dir() const { return resolve(paths.dataset_dir); }

std::string ExperimentConfig::manifest_path() const {
  if (!paths.manifest.empty()) return resolve(paths.manifest);
  return (std::filesystem::path(dataset_dir()) / "manifest.ini").string();
}

std::string ExperimentConfig::checkpoint_path() const {
  if (!paths.checkpoint.empty()) return resolve(paths.checkpoint);
  return resolve("models/" + std::string(task_name(task)) + "-" + variant_name(variant) +
                 "-seed" + std::to_string(train.seed) + ".ckpt");
}

std::string ExperimentConfig::report_dir() const { return resolve(paths.report_dir); }

}  // namespace kicksense
