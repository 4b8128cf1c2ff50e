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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kicksense/util.hpp"

namespace kicksense::nn {

enum class Mode { Train, Eval };

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// Dense row-major array. `grad` is empty until a parameter needs one.
struct Tensor {
  std::vector<std::size_t> shape;
  AlignedVector values;
  AlignedVector grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);

  std::size_t size() const noexcept { return values.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  double* data() noexcept { return values.data(); }
  const double* data() const noexcept { return values.data(); }

  bool has_grad() const noexcept { return grad.size() == values.size() && !values.empty(); }
  void ensure_grad();
  void zero_grad();
  void reshape(std::vector<std::size_t> new_shape);
};

// A trainable tensor registered under a unique dotted name.
struct Param {
  std::string name;
  Tensor* tensor = nullptr;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  // Returns the gradient w.r.t. the last forward input and accumulates
  // parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<Param>& out);
  virtual std::string kind() const = 0;
};

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// x: [B, C_in, L] -> [B, C_out, L'], L' = (L + 2 pad - K) / stride + 1.
class Conv1D final : public Layer {
 public:
  Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t padding, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param>& out) override;
  std::string kind() const override { return "Conv1D"; }

  Tensor weight;  // [C_out, C_in, K]
  Tensor bias;    // [C_out]

 private:
  std::size_t cin_, cout_, k_, stride_, pad_;
  std::vector<std::size_t> in_shape_;
  AlignedVector input_;
  AlignedVector col_;  // per-sample [C_in*K, L'] scratch
  std::size_t out_len_ = 0;
  bool cached_ = false;
};

// x: [B, C_in, H, W] -> [B, C_out, H', W'].
class Conv2D final : public Layer {
 public:
  Conv2D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
         std::size_t kernel_w, std::size_t stride_h, std::size_t stride_w, std::size_t pad_h,
         std::size_t pad_w, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param>& out) override;
  std::string kind() const override { return "Conv2D"; }

  Tensor weight;  // [C_out, C_in, KH, KW]
  Tensor bias;    // [C_out]

 private:
  std::size_t cin_, cout_, kh_, kw_, sh_, sw_, ph_, pw_;
  std::vector<std::size_t> in_shape_;
  AlignedVector input_;
  AlignedVector col_;
  std::size_t out_h_ = 0, out_w_ = 0;
  bool cached_ = false;
};

// Bidirectional LSTM, x: [B, T, D] -> [B, T, 2H]; forward direction in the
// first H features. Gate order in the stacked weights is (i, f, g, o).
class BiLSTM final : public Layer {
 public:
  BiLSTM(std::size_t input_size, std::size_t hidden_size, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param>& out) override;
  std::string kind() const override { return "BiLSTM"; }

  std::size_t hidden_size() const noexcept { return h_; }

  struct Direction {
    Tensor wx;  // [4H, D]
    Tensor wh;  // [4H, H]
    Tensor b;   // [4H]
    // caches, time-major rows (t * B + b)
    AlignedVector gates;  // [T*B, 4H] post-activation
    AlignedVector cell;   // [T*B, H]
    AlignedVector cell_tanh;  // [T*B, H]
    AlignedVector hidden; // [T*B, H]
  };
  Direction fw, bw;

 private:
  void run_direction(Direction& d, bool reverse);
  void back_direction(Direction& d, bool reverse, const AlignedVector& grad_h,
                      AlignedVector& grad_x);

  std::size_t d_, h_;
  std::size_t batch_ = 0, steps_ = 0;
  AlignedVector x_tm_;  // [T*B, D]
  bool cached_ = false;
};

// Mean over one axis; the axis is removed from the shape.
class GlobalAvgPool final : public Layer {
 public:
  explicit GlobalAvgPool(std::size_t axis) : axis_(axis) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "GlobalAvgPool"; }

 private:
  std::size_t axis_;
  std::vector<std::size_t> in_shape_;
  bool cached_ = false;
};

// [B, ...] -> [B, prod(...)].
class Flatten final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "Flatten"; }

 private:
  std::vector<std::size_t> in_shape_;
  bool cached_ = false;
};

// [B, A, C] -> [B, C, A].
class SwapAxes final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "SwapAxes"; }

 private:
  std::vector<std::size_t> in_shape_;
  bool cached_ = false;
};

class ReLU final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "ReLU"; }

 private:
  AlignedVector mask_;
  std::vector<std::size_t> shape_;
  bool cached_ = false;
};

/// Inverted dropout: in Train mode each unit is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate). Identity in Eval mode.
class Dropout final : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "Dropout"; }

  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<double> scale_;
  std::vector<std::size_t> shape_;
  bool cached_ = false;
};

// Multiplies every element by a fixed factor.
class Scale final : public Layer {
 public:
  explicit Scale(double factor) : factor_(factor) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string kind() const override { return "Scale"; }
  double factor() const noexcept { return factor_; }

 private:
  double factor_;
  std::vector<std::size_t> shape_;
  bool cached_ = false;
};

// x: [B, in] -> [B, out].
class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param>& out) override;
  std::string kind() const override { return "Dense"; }

  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

 private:
  std::size_t in_, out_;
  Tensor input_;
  bool cached_ = false;
};

/// Feature self-weighting: w = softmax(W^T F + beta), output F (.) w, over
/// [B, N] inputs. The weight matrix starts at zero so the initial weights
/// are uniform.
class AttentionFusion final : public Layer {
 public:
  explicit AttentionFusion(std::size_t features);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(const std::string& prefix, std::vector<Param>& out) override;
  std::string kind() const override { return "AttentionFusion"; }

  // Weights from the most recent forward pass, [B, N].
  const std::vector<double>& last_weights() const noexcept { return omega_; }

  Tensor weight;  // [N, N]
  Tensor beta;    // [N]

 private:
  std::size_t n_;
  Tensor input_;
  std::vector<double> omega_;
  bool cached_ = false;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <typename L, typename... Args>
  L& add(std::string name, Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    names_.push_back(std::move(name));
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& grad_out);
  void collect_params(const std::string& prefix, std::vector<Param>& out);
  std::size_t size() const noexcept { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d input, same shape as the input
};

/// Mean cross-entropy of softmax(logits) over the batch; logits [B, C].
/// The gradient is (probs - onehot) / B.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Mean squared error over all B*J entries; pred and target [B, J].
LossResult mean_squared_error(const Tensor& pred, const Tensor& target);

struct LrSchedule {
  double initial = 0.005;
  double gamma = 0.5;
  std::size_t decay_period = 10;

  // initial * gamma^floor(step / decay_period)
  double at(std::size_t step) const;
};

enum class OptimizerKind { Adam, Sgd };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, LrSchedule schedule, double beta1 = 0.9, double beta2 = 0.999,
            double epsilon = 1e-8);

  /// Applies one update with the learning rate for `schedule_step` and clears
  /// nothing; callers zero gradients before the next accumulation.
  void step(const std::vector<Param>& params, std::size_t schedule_step);

  OptimizerKind kind() const noexcept { return kind_; }
  std::size_t updates() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  LrSchedule schedule_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

void zero_grads(const std::vector<Param>& params);
std::size_t parameter_count(const std::vector<Param>& params);

// Checkpoint container: magic "KSCKPT01", u32 metadata length + text, u32
// tensor count, then per tensor u32 name length, name, u32 rank, u64 dims,
// f64 values. All integers and doubles little-endian.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

/// Copies parameter values into a checkpoint and back. Load requires every
/// parameter name and shape to be present.
void store_params(const std::vector<Param>& params, Checkpoint& ckpt);
void load_params(const std::vector<Param>& params, const Checkpoint& ckpt);

}  // namespace kicksense::nn
