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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kicksense/data.hpp"
#include "kicksense/eval.hpp"
#include "kicksense/kvfile.hpp"
#include "kicksense/models.hpp"
#include "kicksense/train.hpp"

namespace kicksense {

inline constexpr const char* kOutputRootEnv = "KICKSENSE_OUTPUT_ROOT";

struct PathsConfig {
  std::string output_root = "kicksense-out";
  std::string dataset_dir = "dataset";
  std::string manifest;    // empty: <dataset_dir>/manifest.ini
  std::string checkpoint;  // empty: models/<task>-<variant>-seed<seed>.ckpt
  std::string report_dir = "reports";
};

struct StreamConfig {
  std::vector<StreamScenario> transitions = default_transitions();
  StreamOptions options;
};

// Everything a command needs. Relative paths resolve against output_root,
// which the KICKSENSE_OUTPUT_ROOT environment variable overrides.
struct ExperimentConfig {
  PathsConfig paths;
  BuildConfig build;
  SplitFractions split;
  std::uint64_t split_seed = 7;
  ArchConfig arch;
  Task task = Task::Classify;
  Variant variant = Variant::Fusion;
  TrainOptions train;
  AblationOptions ablate;  // arch and train come from the fields above
  StreamConfig stream;
  double band_mm = 20.0;

  /// Sets "section.key" from text; unknown keys and bad values are Config
  /// errors.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::string> keys() const;
  KvFile to_kv() const;
  std::string dump() const;
  static ExperimentConfig from_kv(const KvFile& kv);
  static ExperimentConfig load(const std::string& path);
  void validate() const;

  std::string output_root() const;
  std::string resolve(const std::string& path) const;
  std::string dataset_dir() const;
  std::string manifest_path() const;
  std::string checkpoint_path() const;
  std::string report_dir() const;
};

}  // namespace kicksense
