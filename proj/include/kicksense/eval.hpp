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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kicksense/data.hpp"
#include "kicksense/models.hpp"
#include "kicksense/train.hpp"

namespace kicksense {

// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kPatternCount>, kPatternCount> counts{};

  void add(int truth, int predicted);
  std::size_t total() const;
  std::size_t correct() const;
  std::size_t row_total(int truth) const;
  double overall_accuracy() const;
  // NaN for classes without samples.
  std::array<double, kPatternCount> per_class_accuracy() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_from_predictions(std::span<const int> truth,
                                           std::span<const int> predicted);
/// Eval-mode argmax predictions over every sample (ties to the lower index).
ConfusionMatrix evaluate_classifier(const KickModel& model, const SampleSource& source,
                                    std::size_t batch_size = 256);

struct ErrorAccumulator {
  double sum_sq_x = 0.0;
  double sum_sq_y = 0.0;
  std::size_t count = 0;
  std::size_t within_x = 0;  // |error| <= band
  std::size_t within_y = 0;

  void add(double err_x, double err_y, double band_mm);
  void merge(const ErrorAccumulator& other);
  double rmse_x() const;
  double rmse_y() const;
  double band_fraction_x() const;
  double band_fraction_y() const;
};

struct RegressionSample {
  int pattern = 0;
  double l_x = 0.0, l_y = 0.0;
  double pred_x = 0.0, pred_y = 0.0;
};

struct RmseReport {
  double band_mm = 20.0;
  std::array<ErrorAccumulator, kPatternCount> per_pattern{};
  // (pattern, L_y in whole mm)
  std::map<std::pair<int, long long>, ErrorAccumulator> stratified;
  ErrorAccumulator pooled;

  std::vector<long long> l_y_levels() const;
  // Mean over patterns of the per-(pattern, L_y) RMSE; NaN if no pattern has
  // samples at that level.
  double mean_rmse_x_at(long long l_y_mm) const;
  double mean_rmse_y_at(long long l_y_mm) const;
};

RmseReport rmse_from_samples(std::span<const RegressionSample> samples, double band_mm = 20.0);
/// De-standardized predictions against labels, per pattern and per L_y.
RmseReport evaluate_regressor(const KickModel& model, const SampleSource& source,
                              double band_mm = 20.0, std::size_t batch_size = 256);

// ------------------------------------------------------------ ablation

struct AblationOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<Variant> variants{Variant::Fusion, Variant::TimeOnly, Variant::FreqOnly,
                                Variant::FftMlp, Variant::StatsMlp};
  bool classify = true;
  bool localize = true;
  ArchConfig arch;
  TrainOptions train;  // seed is overridden per run
  double band_mm = 20.0;
  bool keep_models = false;  // retain trained models in the entries
};

struct AblationEntry {
  Variant variant = Variant::Fusion;
  Task task = Task::Classify;
  std::uint64_t seed = 0;
  ConfusionMatrix confusion;  // classification
  RmseReport rmse;            // localization
  std::string checkpoint_hash;
  double train_seconds = 0.0;
  std::vector<EpochLog> log;
  std::shared_ptr<const KickModel> model;  // set when keep_models
};

struct AblationReport {
  std::vector<AblationEntry> entries;
  std::uint64_t test_records_hash = 0;  // identical for every entry
  std::size_t test_records = 0;

  const AblationEntry* find(Variant variant, Task task, std::uint64_t seed) const;
  // Means over seeds; NaN when the combination was not run.
  double mean_accuracy(Variant variant) const;
  double mean_rmse_x(Variant variant) const;
  double mean_rmse_y(Variant variant) const;
};

using AblationProgress = std::function<void(const AblationEntry&)>;

/// Trains every (task, variant, seed) on the dataset's train split and scores
/// it on the same test records.
AblationReport ablation_suite(const Dataset& dataset, const AblationOptions& options,
                              const AblationProgress& progress = {});

std::uint64_t record_ids_hash(std::span<const std::size_t> ids);

// ----------------------------------------------------------- streaming

struct StreamScenario {
  PatternId from = PatternId::S1;
  PatternId to = PatternId::S1;
  double switch_time_s = 12.0;  // seconds after kick start
  double duration_s = 24.0;
};

struct StreamOptions {
  SimConfig sim;  // noise defaults lower than the dataset for a high-SNR stream
  SensorGeometry geometry;
  double l_x_mm = 30.0;
  double l_y_mm = 60.0;
  std::size_t consecutive = 10;
  std::uint64_t seed = 99;
  StreamOptions() { sim.noise_std_pa = 0.5; }
};

struct StreamPoint {
  double t = 0.0;
  int truth = 0;
  int predicted = 0;
  double confidence = 0.0;
};

struct StreamResult {
  StreamScenario scenario;
  std::vector<StreamPoint> trace;
  // Seconds from the switch to the first of `consecutive` correct
  // predictions; NaN if the stream never settles.
  double transient_s = 0.0;
};

/// The default switch list: s6->s4, s4->s2, s2->s4, s4->s3, s3->s5, s5->s1.
std::vector<StreamScenario> default_transitions();

/// Windows end at every sample once the first full window after kick start
/// is available; each prediction sees only samples up to its timestamp.
StreamResult streaming_recognition(const KickModel& model, const Run& corrected,
                                   const StreamScenario& scenario, std::size_t consecutive = 10);
/// Measures the transient of a prediction trace.
double measure_transient(std::span<const StreamPoint> trace, double switch_time_s, int target,
                         std::size_t consecutive);
Run simulate_stream(const StreamScenario& scenario, const StreamOptions& options);
StreamResult run_stream_scenario(const KickModel& model, const StreamScenario& scenario,
                                 const StreamOptions& options);

// -------------------------------------------------------------- writers

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
void write_rmse_csv(std::ostream& out, const RmseReport& report);
void write_stream_csv(std::ostream& out, std::span<const StreamResult> results);
void write_ablation_csv(std::ostream& out, const AblationReport& report);
void write_classification_summary(std::ostream& out, const ConfusionMatrix& cm);
void write_regression_summary(std::ostream& out, const RmseReport& report);

}  // namespace kicksense
