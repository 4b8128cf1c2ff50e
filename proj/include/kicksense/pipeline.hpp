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

#include <functional>
#include <string>
#include <vector>

#include "kicksense/config.hpp"
#include "kicksense/eval.hpp"

namespace kicksense {

// Progress sink for long-running commands. May be empty.
using LogFn = std::function<void(const std::string&)>;

struct SimulateSummary {
  std::string manifest;
  std::size_t runs = 0;
  std::size_t records = 0;
};

struct TrainSummary {
  std::string checkpoint;
  std::string checkpoint_hash;  // FNV-1a 64 of the checkpoint bytes, hex
  std::vector<EpochLog> log;
};

struct EvalSummary {
  std::string report_dir;
  std::string checkpoint_hash;
  Task task = Task::Classify;
  ConfusionMatrix confusion;
  RmseReport rmse;
  std::uint64_t test_records_hash = 0;
};

struct StreamSummary {
  std::string report_dir;
  std::vector<StreamResult> results;
};

// Hex FNV-1a 64 of a file's bytes.
std::string file_hash(const std::string& path);

SimulateSummary cmd_simulate(const ExperimentConfig& config, const LogFn& log = {});
TrainSummary cmd_train(const ExperimentConfig& config, const LogFn& log = {});
EvalSummary cmd_eval(const ExperimentConfig& config, const LogFn& log = {});
AblationReport cmd_ablate(const ExperimentConfig& config, const LogFn& log = {});
StreamSummary cmd_stream(const ExperimentConfig& config, const LogFn& log = {});

// Stream options as the config describes them: simulator and geometry from the
// dataset settings with the stream's own noise level.
StreamOptions stream_options(const ExperimentConfig& config);

}  // namespace kicksense
