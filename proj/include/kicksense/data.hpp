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
#include <iosfwd>
#include <string>
#include <vector>

#include "kicksense/flowsim.hpp"
#include "kicksense/signal.hpp"

namespace kicksense {

enum class Split { Unassigned, Train, Val, Test };
const char* split_name(Split split) noexcept;

// Provenance of one run in a dataset.
struct RunInfo {
  PatternId pattern = PatternId::S1;
  double l_y = 0.0;  // mm
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string source;  // CSV file name when ingested or exported

  bool same_config(const RunInfo& other) const noexcept {
    return pattern == other.pattern && l_y == other.l_y && repetition == other.repetition;
  }
};

// One labeled window; the samples live in the owning dataset's run.
struct DatasetRecord {
  std::size_t run = 0;
  std::size_t end_row = 0;
  PatternId pattern = PatternId::S1;
  double l_x = 0.0;
  double l_y = 0.0;
  int repetition = 0;
  Split split = Split::Unassigned;

  bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
  std::vector<Run> runs;  // baseline corrected
  std::vector<RunInfo> info;
  std::vector<DatasetRecord> records;
  WindowingOptions windowing;
  double sample_rate_hz = 25.0;
  std::uint64_t split_seed = 0;

  PressureWindow window(const DatasetRecord& record) const;
  std::vector<std::size_t> indices(Split split) const;
  std::size_t count(Split split) const;

  // Runs, provenance (pattern, L_y, repetition), records and windowing.
  bool operator==(const Dataset& other) const;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct BuildConfig {
  std::vector<PatternId> patterns{PatternId::S1, PatternId::S2, PatternId::S3,
                                  PatternId::S4, PatternId::S5, PatternId::S6};
  std::vector<double> l_y_levels{20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
  int repetitions = 10;
  WindowingOptions windowing;
  SimConfig sim;
  SensorGeometry geometry;
  std::uint64_t seed = 20240601;  // base for per-run simulator seeds
};

struct RawRun {
  RunInfo info;
  Run run;  // uncorrected, includes static pressure
};

std::uint64_t run_seed(std::uint64_t base, PatternId pattern, double l_y, int repetition);

std::string run_file_name(const RunInfo& info);

/// Every (pattern, L_y, repetition) sweep, in that nesting order.
std::vector<RawRun> simulate_runs(const BuildConfig& config);

/// Baseline subtraction + windowing of raw runs into labeled records.
Dataset assemble_dataset(const std::vector<RawRun>& raw, const WindowingOptions& windowing,
                         double sample_rate_hz);

/// simulate_runs followed by assemble_dataset.
Dataset build_dataset(const BuildConfig& config);

/// Assigns whole repetitions of each (pattern, L_y) configuration to
/// train/val/test so overlapping windows of one run never straddle splits.
void split_dataset(Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

/// Parses one run CSV. Errors: Schema for header problems, Parse with the
/// line number for malformed rows, Validation for non-increasing time.
Run read_run_csv(std::istream& in, const std::string& source = "<input>");

/// Reads CSV files and assembles a dataset. Repetition indices come from a
/// "_repNN" file-name suffix when present, otherwise from file order within
/// each configuration.
std::vector<RawRun> read_runs(const std::vector<std::string>& paths);
Dataset ingest_csv(const std::vector<std::string>& paths, const WindowingOptions& windowing,
                   double sample_rate_hz);

struct Manifest {
  std::vector<RunInfo> runs;  // source = file name relative to the manifest
  WindowingOptions windowing;
  double sample_rate_hz = 25.0;
  std::uint64_t split_seed = 0;
  SplitFractions fractions;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

/// Reads every run listed in a manifest, windows and splits it.
Dataset load_dataset(const std::string& manifest_path);

/// Writes one CSV per run plus "manifest.ini" into `dir`.
Manifest export_runs(const std::vector<RawRun>& runs, const std::string& dir,
                     const WindowingOptions& windowing, double sample_rate_hz,
                     std::uint64_t split_seed, const SplitFractions& fractions);

}  // namespace kicksense
