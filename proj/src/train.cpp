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

#include "kicksense/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

DatasetSource::DatasetSource(const Dataset& dataset, Split split)
    : ds_(&dataset), ids_(dataset.indices(split)) {}

DatasetSource::DatasetSource(const Dataset& dataset, std::vector<std::size_t> record_ids)
    : ds_(&dataset), ids_(std::move(record_ids)) {
  for (auto id : ids_) {
    require(id < dataset.records.size(), ErrorCode::InvalidArgument, "record id out of range");
  }
}

void DatasetSource::window(std::size_t i, Eigen::MatrixXd& out) const {
  const auto& rec = ds_->records[ids_.at(i)];
  const auto& run = ds_->runs[rec.run];
  const auto len = static_cast<Eigen::Index>(ds_->windowing.window_len);
  out = run.pressure.middleRows(static_cast<Eigen::Index>(rec.end_row) + 1 - len, len);
}

int DatasetSource::label(std::size_t i) const { return pattern_index(record(i).pattern); }

std::array<double, 2> DatasetSource::target(std::size_t i) const {
  const auto& r = record(i);
  return {r.l_x, r.l_y};
}

void TrainOptions::validate() const {
  require(batch_size > 0, ErrorCode::Config, "training: batch_size must be > 0");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::Config,
          "training: learning_rate must be positive");
  require(lr_gamma > 0.0 && lr_gamma <= 1.0, ErrorCode::Config,
          "training: lr_gamma must be in (0, 1]");
  require(decay_epochs > 0 && decay_steps > 0, ErrorCode::Config,
          "training: decay periods must be > 0");
  require(log_every_steps > 0, ErrorCode::Config, "training: log_every_steps must be > 0");
}

namespace {

class Batch {
 public:
  explicit Batch(std::size_t capacity) : windows_(capacity), ptrs_(capacity) {}

  std::span<const Eigen::MatrixXd* const> load(const SampleSource& src,
                                              std::span<const std::size_t> ids) {
    for (std::size_t b = 0; b < ids.size(); ++b) {
      src.window(ids[b], windows_[b]);
      ptrs_[b] = &windows_[b];
    }
    return {ptrs_.data(), ids.size()};
  }

 private:
  std::vector<Eigen::MatrixXd> windows_;
  std::vector<const Eigen::MatrixXd*> ptrs_;
};

void fit_normalization(KickModel& model, const SampleSource& train) {
  require(train.size() > 0, ErrorCode::Validation, "training set is empty");
  // Statistics from at most this many evenly strided samples.
  constexpr std::size_t kMaxStatSamples = 20000;
  const std::size_t stride = std::max<std::size_t>(1, train.size() / kMaxStatSamples);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < train.size(); i += stride) ids.push_back(i);

  if (model.task() == Task::Localize) {
    std::array<double, 2> sum{}, sq{};
    for (auto i : ids) {
      const auto t = train.target(i);
      for (int k = 0; k < 2; ++k) sum[k] += t[k];
    }
    std::array<double, 2> mean{}, sd{};
    for (int k = 0; k < 2; ++k) mean[k] = sum[k] / static_cast<double>(ids.size());
    for (auto i : ids) {
      const auto t = train.target(i);
      for (int k = 0; k < 2; ++k) sq[k] += (t[k] - mean[k]) * (t[k] - mean[k]);
    }
    for (int k = 0; k < 2; ++k) {
      sd[k] = std::sqrt(sq[k] / static_cast<double>(ids.size()));
      if (!(sd[k] > 1e-9)) sd[k] = 1.0;
    }
    model.set_target_normalization(mean, sd);
  }
  if (model.variant() == Variant::FftMlp || model.variant() == Variant::StatsMlp) {
    Batch batch(256);
    std::vector<double> sum, sq;
    std::vector<std::vector<double>> rows;
    for (std::size_t start = 0; start < ids.size(); start += 256) {
      const std::size_t n = std::min<std::size_t>(256, ids.size() - start);
      const auto x = model.raw_baseline_features(batch.load(train, {ids.data() + start, n}));
      const std::size_t f = x.dim(1);
      if (sum.empty()) {
        sum.assign(f, 0.0);
        sq.assign(f, 0.0);
      }
      for (std::size_t b = 0; b < n; ++b) {
        rows.emplace_back(x.values.begin() + static_cast<std::ptrdiff_t>(b * f),
                          x.values.begin() + static_cast<std::ptrdiff_t>((b + 1) * f));
        for (std::size_t j = 0; j < f; ++j) sum[j] += x.values[b * f + j];
      }
    }
    const double n = static_cast<double>(rows.size());
    std::vector<double> mean(sum.size()), sd(sum.size());
    for (std::size_t j = 0; j < sum.size(); ++j) mean[j] = sum[j] / n;
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < r.size(); ++j) sq[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    }
    for (std::size_t j = 0; j < sum.size(); ++j) {
      sd[j] = std::sqrt(sq[j] / n);
      if (!(sd[j] > 1e-9)) sd[j] = 1.0;
    }
    model.set_feature_normalization(std::move(mean), std::move(sd));
  }
}

// Loss over one batch; accumulates the metric numerator.
double batch_step(KickModel& model, const SampleSource& src, std::span<const std::size_t> ids,
                  std::span<const Eigen::MatrixXd* const> windows, double& metric_sum) {
  const nn::Tensor out = model.forward(windows, nn::Mode::Train);
  const std::size_t b = ids.size();
  nn::LossResult loss;
  if (model.task() == Task::Classify) {
    std::vector<int> labels(b);
    for (std::size_t i = 0; i < b; ++i) labels[i] = src.label(ids[i]);
    loss = nn::softmax_cross_entropy(out, labels);
    for (std::size_t i = 0; i < b; ++i) {
      const double* row = out.data() + i * out.dim(1);
      const auto best = std::max_element(row, row + out.dim(1)) - row;
      if (best == labels[i]) metric_sum += 1.0;
    }
  } else {
    const auto mean = model.target_mean();
    const auto sd = model.target_std();
    nn::Tensor target({b, 2});
    for (std::size_t i = 0; i < b; ++i) {
      const auto t = src.target(ids[i]);
      for (std::size_t k = 0; k < 2; ++k) {
        target.values[i * 2 + k] = (t[k] - mean[k]) / sd[k];
        const double err = (out.values[i * 2 + k] - target.values[i * 2 + k]) * sd[k];
        metric_sum += err * err;
      }
    }
    loss = nn::mean_squared_error(out, target);
  }
  model.backward(loss.grad);
  return loss.loss;
}

double finish_metric(Task task, double sum, std::size_t count) {
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return task == Task::Classify ? sum / static_cast<double>(count)
                                : std::sqrt(sum / static_cast<double>(count));
}

}  // namespace

double quick_metric(const KickModel& model, const SampleSource& source, std::size_t max_windows,
                    std::size_t batch_size) {
  require(batch_size > 0, ErrorCode::InvalidArgument, "batch_size must be > 0");
  if (source.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t stride =
      max_windows == 0 ? 1 : std::max<std::size_t>(1, (source.size() + max_windows - 1) / max_windows);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < source.size(); i += stride) ids.push_back(i);
  Batch batch(batch_size);
  double sum = 0.0;
  for (std::size_t start = 0; start < ids.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, ids.size() - start);
    const std::span<const std::size_t> chunk(ids.data() + start, n);
    const auto preds = model.predict(batch.load(source, chunk));
    for (std::size_t i = 0; i < n; ++i) {
      if (model.task() == Task::Classify) {
        if (preds[i].predicted_class() == source.label(chunk[i])) sum += 1.0;
      } else {
        const auto t = source.target(chunk[i]);
        sum += (preds[i].l_x - t[0]) * (preds[i].l_x - t[0]) +
               (preds[i].l_y - t[1]) * (preds[i].l_y - t[1]);
      }
    }
  }
  if (model.task() == Task::Classify) return sum / static_cast<double>(ids.size());
  return std::sqrt(sum / static_cast<double>(2 * ids.size()));
}

std::vector<EpochLog> train_existing(KickModel& model, const SampleSource& train,
                                     const SampleSource* val, const TrainOptions& options,
                                     const TrainCallback& callback) {
  options.validate();
  require(train.size() > 0, ErrorCode::Validation, "training set is empty");
  const bool classify = model.task() == Task::Classify;
  const nn::LrSchedule schedule{options.learning_rate, options.lr_gamma,
                                classify ? options.decay_epochs : options.decay_steps};
  nn::Optimizer opt(options.optimizer, schedule);
  const auto params = model.params();
  const std::uint64_t shuffle_seed = mix_seed(options.seed, 0x5348554646ULL);
  Batch batch(options.batch_size);
  std::vector<EpochLog> log;

  std::vector<std::size_t> order(train.size());
  std::size_t pass = 0;
  auto reshuffle = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(shuffle_seed, pass++));
    rng.shuffle(order.begin(), order.end());
  };

  auto emit = [&](std::size_t epoch, std::size_t step, double lr, double loss_sum,
                  std::size_t batches, double metric_sum, std::size_t seen) {
    EpochLog e;
    e.epoch = epoch;
    e.step = step;
    e.lr = lr;
    e.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    e.train_metric = classify ? finish_metric(model.task(), metric_sum, seen)
                              : finish_metric(model.task(), metric_sum, 2 * seen);
    e.val_metric = val ? quick_metric(model, *val, options.val_max_windows)
                       : std::numeric_limits<double>::quiet_NaN();
    log.push_back(e);
    if (callback) callback(e);
  };

  if (classify) {
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      reshuffle();
      std::size_t n = order.size();
      if (options.max_windows_per_epoch > 0) n = std::min(n, options.max_windows_per_epoch);
      double loss_sum = 0.0, metric_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < n; start += options.batch_size) {
        const std::size_t m = std::min(options.batch_size, n - start);
        const std::span<const std::size_t> ids(order.data() + start, m);
        nn::zero_grads(params);
        loss_sum += batch_step(model, train, ids, batch.load(train, ids), metric_sum);
        opt.step(params, epoch);
        ++batches;
        ++step;
      }
      emit(epoch + 1, step, schedule.at(epoch), loss_sum, batches, metric_sum, n);
    }
    return log;
  }

  reshuffle();
  std::size_t cursor = 0;
  double loss_sum = 0.0, metric_sum = 0.0;
  std::size_t batches = 0, seen = 0;
  for (std::size_t step = 0; step < options.steps; ++step) {
    if (cursor + options.batch_size > order.size() && cursor > 0) {
      reshuffle();
      cursor = 0;
    }
    const std::size_t m = std::min(options.batch_size, order.size() - cursor);
    const std::span<const std::size_t> ids(order.data() + cursor, m);
    cursor += m;
    nn::zero_grads(params);
    loss_sum += batch_step(model, train, ids, batch.load(train, ids), metric_sum);
    opt.step(params, step);
    ++batches;
    seen += m;
    if ((step + 1) % options.log_every_steps == 0 || step + 1 == options.steps) {
      emit(log.size() + 1, step + 1, schedule.at(step), loss_sum, batches, metric_sum, seen);
      loss_sum = metric_sum = 0.0;
      batches = seen = 0;
    }
  }
  return log;
}

TrainResult train_model(const SampleSource& train, const SampleSource* val, Task task,
                        Variant variant, const ArchConfig& arch, const TrainOptions& options,
                        double sample_rate_hz, const TrainCallback& callback) {
  TrainResult result;
  result.model = std::make_unique<KickModel>(task, variant, arch, options.seed, sample_rate_hz);
  fit_normalization(*result.model, train);
  result.log = train_existing(*result.model, train, val, options, callback);
  return result;
}

}  // namespace kicksense
