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

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "kicksense/data.hpp"
#include "kicksense/models.hpp"

namespace kicksense {

// Indexable labeled windows for training and evaluation.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual void window(std::size_t i, Eigen::MatrixXd& out) const = 0;
  virtual int label(std::size_t i) const = 0;
  virtual std::array<double, 2> target(std::size_t i) const = 0;  // (L_x, L_y) mm
};

// Records of one split, read lazily from the dataset's runs.
class DatasetSource final : public SampleSource {
 public:
  DatasetSource(const Dataset& dataset, Split split);
  DatasetSource(const Dataset& dataset, std::vector<std::size_t> record_ids);
  std::size_t size() const override { return ids_.size(); }
  void window(std::size_t i, Eigen::MatrixXd& out) const override;
  int label(std::size_t i) const override;
  std::array<double, 2> target(std::size_t i) const override;
  const DatasetRecord& record(std::size_t i) const { return ds_->records[ids_[i]]; }
  const std::vector<std::size_t>& record_ids() const noexcept { return ids_; }

 private:
  const Dataset* ds_;
  std::vector<std::size_t> ids_;
};

class MemorySource final : public SampleSource {
 public:
  std::vector<Eigen::MatrixXd> windows;
  std::vector<int> labels;
  std::vector<std::array<double, 2>> targets;
  std::size_t size() const override { return windows.size(); }
  void window(std::size_t i, Eigen::MatrixXd& out) const override { out = windows.at(i); }
  int label(std::size_t i) const override { return labels.at(i); }
  std::array<double, 2> target(std::size_t i) const override { return targets.at(i); }
};

struct TrainOptions {
  std::size_t epochs = 30;     // classification
  std::size_t steps = 1000;    // localization
  std::size_t batch_size = 128;
  double learning_rate = 0.005;
  double lr_gamma = 0.5;
  std::size_t decay_epochs = 10;   // classification
  std::size_t decay_steps = 250;   // localization
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  std::uint64_t seed = 1;
  // Per-epoch subsample of the training windows; 0 uses all of them.
  std::size_t max_windows_per_epoch = 0;
  std::size_t log_every_steps = 50;  // localization log cadence
  std::size_t val_max_windows = 2000;
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based; localization counts log intervals
  std::size_t step = 0;   // optimizer updates so far
  double lr = 0.0;
  double train_loss = 0.0;
  // Accuracy for classification, RMSE (mm, Euclidean over both axes) for
  // localization; NaN without a validation set.
  double train_metric = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  std::unique_ptr<KickModel> model;
  std::vector<EpochLog> log;
};

using TrainCallback = std::function<void(const EpochLog&)>;

/// Fits normalization statistics, then trains a fresh model.
TrainResult train_model(const SampleSource& train, const SampleSource* val, Task task,
                        Variant variant, const ArchConfig& arch, const TrainOptions& options,
                        double sample_rate_hz = 25.0, const TrainCallback& callback = {});

/// Continues training an existing model with its current normalization.
std::vector<EpochLog> train_existing(KickModel& model, const SampleSource& train,
                                     const SampleSource* val, const TrainOptions& options,
                                     const TrainCallback& callback = {});

/// Accuracy or Euclidean RMSE in mm over at most `max_windows` samples
/// (evenly strided; 0 means all).
double quick_metric(const KickModel& model, const SampleSource& source,
                    std::size_t max_windows = 0, std::size_t batch_size = 256);

}  // namespace kicksense
