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
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "kicksense/kinematics.hpp"
#include "kicksense/nn.hpp"
#include "kicksense/signal.hpp"

namespace kicksense {

enum class Task { Classify, Localize };
enum class Variant { Fusion, TimeOnly, FreqOnly, FftMlp, StatsMlp };

const char* task_name(Task task) noexcept;
const char* variant_name(Variant variant) noexcept;
Task parse_task(const std::string& text);
Variant parse_variant(const std::string& text);

// Layer sizes and preprocessing constants shared by all variants.
struct ArchConfig {
  std::size_t window_len = kWindowLength;
  std::size_t sensors = 3;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t conv_kernel = 5;
  std::size_t conv2_stride = 4;
  std::size_t lstm_hidden = 32;
  std::size_t conv2d1_channels = 8;
  std::size_t conv2d2_channels = 16;
  std::size_t freq_features = 64;
  double dropout = 0.3;
  std::size_t fft_size = 32;
  std::size_t hop = 1;
  double compression_pa = 5.0;  // soft-compression scale of the input pressure
  std::size_t mlp_hidden = 32;

  std::size_t time_features() const noexcept { return 2 * lstm_hidden; }
  std::size_t fused_features() const noexcept { return time_features() + freq_features; }
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

struct FusedFeature {
  std::vector<double> f_t;
  std::vector<double> f_tf;
  std::vector<double> f_concat;
  std::vector<double> weights;
  std::vector<double> f_weighted;
};

struct TaskOutput {
  Task task = Task::Classify;
  std::array<double, kPatternCount> class_probs{};
  double l_x = 0.0;  // mm
  double l_y = 0.0;  // mm
  // Argmax with ties going to the lower index.
  int predicted_class() const;
};

/// F = f_t (+) f_tf, w = softmax(W^T F + beta), F_w = F (.) w. `w_matrix` is
/// row-major N x N.
FusedFeature attention_fuse(std::span<const double> f_t, std::span<const double> f_tf,
                            std::span<const double> w_matrix, std::span<const double> beta);

inline constexpr std::size_t kFftFeatureCount = 12;
inline constexpr std::size_t kStatsFeatureCount = 9;

/// Per sensor, the two DFT bins in 1..N/2 with the largest energy (ties to the
/// lower index), each as (frequency Hz, amplitude 2|X|/N).
std::vector<double> fft_features(const Eigen::Ref<const Eigen::MatrixXd>& window,
                                 double sample_rate_hz);
/// Per sensor (max, min, mean).
std::vector<double> stats_features(const Eigen::Ref<const Eigen::MatrixXd>& window);

// Converts raw windows into the network inputs of one variant.
class Featurizer {
 public:
  Featurizer(const ArchConfig& arch, double sample_rate_hz);
  // Per sensor: mean removal then asinh(x / compression_pa).
  void compress(const Eigen::Ref<const Eigen::MatrixXd>& window, double* out) const;
  // [B, sensors, window_len]
  nn::Tensor time_input(std::span<const Eigen::MatrixXd* const> windows) const;
  // [B, sensors, frames, bins], log1p of the power spectrogram.
  nn::Tensor freq_input(std::span<const Eigen::MatrixXd* const> windows) const;
  nn::Tensor baseline_input(Variant variant,
                            std::span<const Eigen::MatrixXd* const> windows) const;
  std::size_t frames() const noexcept { return plan_.frames(); }
  std::size_t bins() const noexcept { return plan_.bins(); }

 private:
  ArchConfig arch_;
  double fs_;
  StftPlan plan_;
};

// One trainable network for a (task, variant) pair plus its input and target
// normalization. Inference through predict() is serialized internally, so a
// trained model can be shared between threads.
class KickModel {
 public:
  KickModel(Task task, Variant variant, const ArchConfig& arch, std::uint64_t seed,
            double sample_rate_hz = 25.0);
  KickModel(const KickModel&) = delete;
  KickModel& operator=(const KickModel&) = delete;

  Task task() const noexcept { return task_; }
  Variant variant() const noexcept { return variant_; }
  const ArchConfig& arch() const noexcept { return arch_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double sample_rate_hz() const noexcept { return fs_; }
  std::size_t output_size() const noexcept;

  // Raw network output for a batch: logits [B, 6] or standardized [B, 2].
  nn::Tensor forward(std::span<const Eigen::MatrixXd* const> windows, nn::Mode mode);
  // Back-propagates d loss / d output through every parameter.
  void backward(const nn::Tensor& grad_out);
  std::vector<nn::Param> params();
  std::size_t parameter_count();

  std::vector<TaskOutput> predict(std::span<const Eigen::MatrixXd* const> windows) const;
  TaskOutput predict(const Eigen::MatrixXd& window) const;

  // Branch features in eval mode. Fusion and the matching single-branch
  // variant only.
  std::vector<double> time_features(const Eigen::MatrixXd& window) const;
  std::vector<double> freq_features(const Eigen::MatrixXd& window) const;
  // Fusion variant only.
  FusedFeature fused_feature(const Eigen::MatrixXd& window) const;
  nn::AttentionFusion& attention();

  // Baseline feature standardization.
  void set_feature_normalization(std::vector<double> mean, std::vector<double> stddev);
  const std::vector<double>& feature_mean() const noexcept { return feature_mean_; }
  const std::vector<double>& feature_std() const noexcept { return feature_std_; }
  // Regression target standardization, (L_x, L_y) in mm.
  void set_target_normalization(std::array<double, 2> mean, std::array<double, 2> stddev);
  std::array<double, 2> target_mean() const noexcept { return target_mean_; }
  std::array<double, 2> target_std() const noexcept { return target_std_; }

  const Featurizer& featurizer() const noexcept { return featurizer_; }
  // Baseline feature vectors before standardization, [B, F].
  nn::Tensor raw_baseline_features(std::span<const Eigen::MatrixXd* const> windows) const;

  nn::Checkpoint to_checkpoint() const;
  static std::unique_ptr<KickModel> from_checkpoint(const nn::Checkpoint& ckpt);
  void save(const std::string& path) const;
  static std::unique_ptr<KickModel> load(const std::string& path);

 private:
  void build();
  bool uses_time() const noexcept;
  bool uses_freq() const noexcept;
  bool is_baseline() const noexcept;
  nn::Tensor run(std::span<const Eigen::MatrixXd* const> windows, nn::Mode mode);
  std::vector<nn::Param> params_locked() const;

  Task task_;
  Variant variant_;
  ArchConfig arch_;
  std::uint64_t seed_;
  double fs_;
  Featurizer featurizer_;
  mutable nn::Sequential time_;
  mutable nn::Sequential freq_;
  mutable nn::Sequential head_;
  nn::AttentionFusion* attention_ = nullptr;
  std::vector<double> feature_mean_, feature_std_;
  std::array<double, 2> target_mean_{0.0, 0.0};
  std::array<double, 2> target_std_{1.0, 1.0};
  std::size_t time_width_ = 0;
  mutable std::mutex mutex_;
};

}  // namespace kicksense
