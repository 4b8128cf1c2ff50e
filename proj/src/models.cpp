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

#include "kicksense/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/kvfile.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

using nn::Mode;
using nn::Tensor;

const char* task_name(Task task) noexcept {
  return task == Task::Classify ? "classify" : "localize";
}

const char* variant_name(Variant variant) noexcept {
  switch (variant) {
    case Variant::Fusion: return "fusion";
    case Variant::TimeOnly: return "time";
    case Variant::FreqOnly: return "freq";
    case Variant::FftMlp: return "fft-mlp";
    case Variant::StatsMlp: return "stats-mlp";
  }
  return "?";
}

Task parse_task(const std::string& text) {
  if (text == "classify") return Task::Classify;
  if (text == "localize") return Task::Localize;
  fail(ErrorCode::Config, "unknown task '" + text + "' (expected classify or localize)");
}

Variant parse_variant(const std::string& text) {
  for (Variant v : {Variant::Fusion, Variant::TimeOnly, Variant::FreqOnly, Variant::FftMlp,
                    Variant::StatsMlp}) {
    if (text == variant_name(v)) return v;
  }
  fail(ErrorCode::Config,
       "unknown variant '" + text + "' (expected fusion, time, freq, fft-mlp or stats-mlp)");
}

void ArchConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    require(v > 0, ErrorCode::Config, std::string("architecture: ") + name + " must be > 0");
  };
  positive(window_len, "window_len");
  positive(sensors, "sensors");
  positive(conv1_channels, "conv1_channels");
  positive(conv2_channels, "conv2_channels");
  positive(conv_kernel, "conv_kernel");
  positive(conv2_stride, "conv2_stride");
  positive(lstm_hidden, "lstm_hidden");
  positive(conv2d1_channels, "conv2d1_channels");
  positive(conv2d2_channels, "conv2d2_channels");
  positive(freq_features, "freq_features");
  positive(hop, "hop");
  positive(mlp_hidden, "mlp_hidden");
  require(conv_kernel % 2 == 1, ErrorCode::Config, "architecture: conv_kernel must be odd");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::Config,
          "architecture: dropout must be in [0, 1)");
  require(compression_pa > 0.0 && std::isfinite(compression_pa), ErrorCode::Config,
          "architecture: compression_pa must be positive");
  require(fft_size >= 2 && fft_size <= window_len, ErrorCode::Config,
          "architecture: fft_size must be in [2, window_len]");
}

int TaskOutput::predicted_class() const {
  int best = 0;
  for (int c = 1; c < kPatternCount; ++c) {
    if (class_probs[static_cast<std::size_t>(c)] > class_probs[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

FusedFeature attention_fuse(std::span<const double> f_t, std::span<const double> f_tf,
                            std::span<const double> w_matrix, std::span<const double> beta) {
  FusedFeature out;
  out.f_t.assign(f_t.begin(), f_t.end());
  out.f_tf.assign(f_tf.begin(), f_tf.end());
  out.f_concat = out.f_t;
  out.f_concat.insert(out.f_concat.end(), f_tf.begin(), f_tf.end());
  const std::size_t n = out.f_concat.size();
  require(w_matrix.size() == n * n && beta.size() == n, ErrorCode::InvalidArgument,
          "attention_fuse: parameter size mismatch");
  for (double v : out.f_concat) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "attention_fuse: non-finite feature");
  }
  std::vector<double> z(beta.begin(), beta.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double f = out.f_concat[j];
    for (std::size_t i = 0; i < n; ++i) z[i] += w_matrix[j * n + i] * f;
  }
  out.weights = nn::softmax(z);
  out.f_weighted.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.f_weighted[i] = out.f_concat[i] * out.weights[i];
  return out;
}

// ------------------------------------------------------------ baselines

std::vector<double> fft_features(const Eigen::Ref<const Eigen::MatrixXd>& window,
                                 double sample_rate_hz) {
  const std::size_t n = static_cast<std::size_t>(window.rows());
  require(n >= 4, ErrorCode::InvalidArgument, "fft_features: window too short");
  // One rectangular frame covering the whole window is a plain DFT.
  thread_local std::unique_ptr<StftPlan> plan;
  thread_local std::size_t plan_len = 0;
  if (!plan || plan_len != n) {
    plan = std::make_unique<StftPlan>(StftParams{n, n, WindowFunction::Rectangular, true}, n);
    plan_len = n;
  }
  std::vector<double> series(n), energy(plan->bins());
  std::vector<double> out;
  out.reserve(4 * static_cast<std::size_t>(window.cols()));
  for (Eigen::Index s = 0; s < window.cols(); ++s) {
    for (std::size_t i = 0; i < n; ++i) series[i] = window(static_cast<Eigen::Index>(i), s);
    plan->power(series, energy.data());
    // Peaks equal to within rounding rank by lower bin.
    const auto above = [](double e, double ref) { return e > ref + 1e-9 * std::abs(ref); };
    std::size_t first = 0, second = 0;
    double e1 = -1.0, e2 = -1.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double e = energy[k];
      if (above(e, e1)) {
        second = first;
        e2 = e1;
        first = k;
        e1 = e;
      } else if (above(e, e2)) {
        second = k;
        e2 = e;
      }
    }
    for (std::size_t k : {first, second}) {
      out.push_back(static_cast<double>(k) * sample_rate_hz / static_cast<double>(n));
      out.push_back(2.0 * std::sqrt(energy[k]) / static_cast<double>(n));
    }
  }
  return out;
}

std::vector<double> stats_features(const Eigen::Ref<const Eigen::MatrixXd>& window) {
  require(window.rows() > 0, ErrorCode::InvalidArgument, "stats_features: empty window");
  std::vector<double> out;
  out.reserve(3 * static_cast<std::size_t>(window.cols()));
  for (Eigen::Index s = 0; s < window.cols(); ++s) {
    out.push_back(window.col(s).maxCoeff());
    out.push_back(window.col(s).minCoeff());
    out.push_back(window.col(s).mean());
  }
  return out;
}

// ----------------------------------------------------------- featurizer

Featurizer::Featurizer(const ArchConfig& arch, double sample_rate_hz)
    : arch_(arch),
      fs_(sample_rate_hz),
      plan_(StftParams{arch.fft_size, arch.hop, WindowFunction::Hamming, true}, arch.window_len) {}

namespace {

void check_window(const Eigen::MatrixXd* w, const ArchConfig& arch) {
  require(w != nullptr, ErrorCode::InvalidArgument, "null window");
  require(static_cast<std::size_t>(w->rows()) == arch.window_len &&
              static_cast<std::size_t>(w->cols()) == arch.sensors,
          ErrorCode::InvalidArgument,
          "window shape " + std::to_string(w->rows()) + "x" + std::to_string(w->cols()) +
              " does not match the expected " + std::to_string(arch.window_len) + "x" +
              std::to_string(arch.sensors));
}

}  // namespace

void Featurizer::compress(const Eigen::Ref<const Eigen::MatrixXd>& window, double* out) const {
  const std::size_t n = static_cast<std::size_t>(window.rows());
  const double inv = 1.0 / arch_.compression_pa;
  for (Eigen::Index s = 0; s < window.cols(); ++s) {
    const double mean = window.col(s).mean();
    double* dst = out + static_cast<std::size_t>(s) * n;
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = std::asinh((window(static_cast<Eigen::Index>(i), s) - mean) * inv);
    }
  }
}

Tensor Featurizer::time_input(std::span<const Eigen::MatrixXd* const> windows) const {
  const std::size_t per = arch_.sensors * arch_.window_len;
  Tensor x({windows.size(), arch_.sensors, arch_.window_len});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    check_window(windows[b], arch_);
    compress(*windows[b], x.data() + b * per);
  }
  return x;
}

Tensor Featurizer::freq_input(std::span<const Eigen::MatrixXd* const> windows) const {
  const std::size_t len = arch_.window_len;
  const std::size_t plane = plan_.frames() * plan_.bins();
  Tensor x({windows.size(), arch_.sensors, plan_.frames(), plan_.bins()});
  std::vector<double> series(arch_.sensors * len);
  for (std::size_t b = 0; b < windows.size(); ++b) {
    check_window(windows[b], arch_);
    compress(*windows[b], series.data());
    for (std::size_t s = 0; s < arch_.sensors; ++s) {
      double* dst = x.data() + (b * arch_.sensors + s) * plane;
      plan_.power(std::span<const double>(series.data() + s * len, len), dst);
      auto power = Eigen::Map<Eigen::ArrayXd>(dst, static_cast<Eigen::Index>(plane));
      power = power.log1p();
    }
  }
  return x;
}

Tensor Featurizer::baseline_input(Variant variant,
                                  std::span<const Eigen::MatrixXd* const> windows) const {
  require(variant == Variant::FftMlp || variant == Variant::StatsMlp, ErrorCode::InvalidArgument,
          "baseline_input: not a baseline variant");
  const std::size_t f = variant == Variant::FftMlp ? 4 * arch_.sensors : 3 * arch_.sensors;
  Tensor x({windows.size(), f});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    check_window(windows[b], arch_);
    const auto feats = variant == Variant::FftMlp ? fft_features(*windows[b], fs_)
                                                  : stats_features(*windows[b]);
    std::copy(feats.begin(), feats.end(), x.values.begin() + static_cast<std::ptrdiff_t>(b * f));
  }
  return x;
}

// ---------------------------------------------------------------- model

KickModel::KickModel(Task task, Variant variant, const ArchConfig& arch, std::uint64_t seed,
                     double sample_rate_hz)
    : task_(task),
      variant_(variant),
      arch_(arch),
      seed_(seed),
      fs_(sample_rate_hz),
      featurizer_((arch.validate(), arch), sample_rate_hz) {
  require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), ErrorCode::Config,
          "sample rate must be positive");
  build();
}

std::size_t KickModel::output_size() const noexcept {
  return task_ == Task::Classify ? static_cast<std::size_t>(kPatternCount) : 2;
}

bool KickModel::uses_time() const noexcept {
  return variant_ == Variant::Fusion || variant_ == Variant::TimeOnly;
}

bool KickModel::uses_freq() const noexcept {
  return variant_ == Variant::Fusion || variant_ == Variant::FreqOnly;
}

bool KickModel::is_baseline() const noexcept {
  return variant_ == Variant::FftMlp || variant_ == Variant::StatsMlp;
}

void KickModel::build() {
  Rng time_rng(mix_seed(seed_, 1));
  Rng freq_rng(mix_seed(seed_, 2));
  Rng head_rng(mix_seed(seed_, 3));
  const std::uint64_t dropout_seed = mix_seed(seed_, 4);
  const std::size_t out = output_size();
  const std::size_t k = arch_.conv_kernel;

  if (uses_time()) {
    time_.add<nn::Conv1D>("conv1", arch_.sensors, arch_.conv1_channels, k, 1, k / 2, time_rng);
    time_.add<nn::ReLU>("relu1");
    time_.add<nn::Conv1D>("conv2", arch_.conv1_channels, arch_.conv2_channels, k,
                          arch_.conv2_stride, k / 2, time_rng);
    time_.add<nn::ReLU>("relu2");
    time_.add<nn::SwapAxes>("swap");
    time_.add<nn::BiLSTM>("lstm", arch_.conv2_channels, arch_.lstm_hidden, time_rng);
    time_.add<nn::GlobalAvgPool>("gap", 1);
  }
  if (uses_freq()) {
    const std::size_t w1 = featurizer_.bins();
    const std::size_t w2 = (w1 + 2 - 3) / 2 + 1;
    freq_.add<nn::Conv2D>("conv1", arch_.sensors, arch_.conv2d1_channels, 3, 3, 2, 1, 1, 1,
                          freq_rng);
    freq_.add<nn::ReLU>("relu1");
    freq_.add<nn::Conv2D>("conv2", arch_.conv2d1_channels, arch_.conv2d2_channels, 3, 3, 2, 2,
                          1, 1, freq_rng);
    freq_.add<nn::ReLU>("relu2");
    freq_.add<nn::GlobalAvgPool>("gap", 2);
    freq_.add<nn::Flatten>("flatten");
    freq_.add<nn::Dense>("proj", arch_.conv2d2_channels * w2, arch_.freq_features, freq_rng);
    freq_.add<nn::ReLU>("relu3");
  }
  switch (variant_) {
    case Variant::Fusion:
      time_width_ = arch_.time_features();
      head_.add<nn::Dropout>("dropout", arch_.dropout, dropout_seed);
      attention_ = &head_.add<nn::AttentionFusion>("attention", arch_.fused_features());
      // The weights sum to one; rescale so uniform weights pass F at unit gain.
      head_.add<nn::Scale>("gain", static_cast<double>(arch_.fused_features()));
      head_.add<nn::Dense>("out", arch_.fused_features(), out, head_rng);
      break;
    case Variant::TimeOnly:
      head_.add<nn::Dropout>("dropout", arch_.dropout, dropout_seed);
      head_.add<nn::Dense>("out", arch_.time_features(), out, head_rng);
      break;
    case Variant::FreqOnly:
      head_.add<nn::Dropout>("dropout", arch_.dropout, dropout_seed);
      head_.add<nn::Dense>("out", arch_.freq_features, out, head_rng);
      break;
    case Variant::FftMlp:
    case Variant::StatsMlp: {
      const std::size_t f = variant_ == Variant::FftMlp ? 4 * arch_.sensors : 3 * arch_.sensors;
      head_.add<nn::Dense>("fc1", f, arch_.mlp_hidden, head_rng);
      head_.add<nn::ReLU>("relu1");
      head_.add<nn::Dense>("fc2", arch_.mlp_hidden, arch_.mlp_hidden, head_rng);
      head_.add<nn::ReLU>("relu2");
      head_.add<nn::Dense>("out", arch_.mlp_hidden, out, head_rng);
      feature_mean_.assign(f, 0.0);
      feature_std_.assign(f, 1.0);
      break;
    }
  }
}

Tensor KickModel::raw_baseline_features(std::span<const Eigen::MatrixXd* const> windows) const {
  return featurizer_.baseline_input(variant_, windows);
}

Tensor KickModel::run(std::span<const Eigen::MatrixXd* const> windows, Mode mode) {
  if (is_baseline()) {
    Tensor x = featurizer_.baseline_input(variant_, windows);
    const std::size_t f = feature_mean_.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.values[i] = (x.values[i] - feature_mean_[i % f]) / feature_std_[i % f];
    }
    return head_.forward(x, mode);
  }
  if (variant_ == Variant::TimeOnly) {
    return head_.forward(time_.forward(featurizer_.time_input(windows), mode), mode);
  }
  if (variant_ == Variant::FreqOnly) {
    return head_.forward(freq_.forward(featurizer_.freq_input(windows), mode), mode);
  }
  const Tensor ft = time_.forward(featurizer_.time_input(windows), mode);
  const Tensor ftf = freq_.forward(featurizer_.freq_input(windows), mode);
  const std::size_t b = windows.size(), nt = ft.dim(1), nf = ftf.dim(1);
  Tensor cat({b, nt + nf});
  for (std::size_t r = 0; r < b; ++r) {
    std::copy_n(ft.data() + r * nt, nt, cat.data() + r * (nt + nf));
    std::copy_n(ftf.data() + r * nf, nf, cat.data() + r * (nt + nf) + nt);
  }
  return head_.forward(cat, mode);
}

Tensor KickModel::forward(std::span<const Eigen::MatrixXd* const> windows, Mode mode) {
  std::lock_guard<std::mutex> lock(mutex_);
  return run(windows, mode);
}

void KickModel::backward(const Tensor& grad_out) {
  std::lock_guard<std::mutex> lock(mutex_);
  const Tensor g = head_.backward(grad_out);
  switch (variant_) {
    case Variant::TimeOnly: time_.backward(g); break;
    case Variant::FreqOnly: freq_.backward(g); break;
    case Variant::Fusion: {
      const std::size_t b = g.dim(0), n = g.dim(1), nt = time_width_, nf = n - nt;
      Tensor gt({b, nt}), gf({b, nf});
      for (std::size_t r = 0; r < b; ++r) {
        std::copy_n(g.data() + r * n, nt, gt.data() + r * nt);
        std::copy_n(g.data() + r * n + nt, nf, gf.data() + r * nf);
      }
      time_.backward(gt);
      freq_.backward(gf);
      break;
    }
    default: break;
  }
}

std::vector<nn::Param> KickModel::params_locked() const {
  std::vector<nn::Param> out;
  time_.collect_params("time", out);
  freq_.collect_params("freq", out);
  head_.collect_params("head", out);
  return out;
}

std::vector<nn::Param> KickModel::params() {
  std::lock_guard<std::mutex> lock(mutex_);
  return params_locked();
}

std::size_t KickModel::parameter_count() { return nn::parameter_count(params()); }

std::vector<TaskOutput> KickModel::predict(std::span<const Eigen::MatrixXd* const> windows) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const Tensor y = const_cast<KickModel*>(this)->run(windows, Mode::Eval);
  std::vector<TaskOutput> out(windows.size());
  const std::size_t n = y.dim(1);
  for (std::size_t b = 0; b < windows.size(); ++b) {
    out[b].task = task_;
    const std::span<const double> row(y.data() + b * n, n);
    if (task_ == Task::Classify) {
      const auto p = nn::softmax(row);
      std::copy(p.begin(), p.end(), out[b].class_probs.begin());
    } else {
      out[b].l_x = row[0] * target_std_[0] + target_mean_[0];
      out[b].l_y = row[1] * target_std_[1] + target_mean_[1];
    }
  }
  return out;
}

TaskOutput KickModel::predict(const Eigen::MatrixXd& window) const {
  const Eigen::MatrixXd* ptr = &window;
  return predict(std::span<const Eigen::MatrixXd* const>(&ptr, 1)).front();
}

std::vector<double> KickModel::time_features(const Eigen::MatrixXd& window) const {
  require(uses_time(), ErrorCode::State, "model has no time-domain branch");
  std::lock_guard<std::mutex> lock(mutex_);
  const Eigen::MatrixXd* ptr = &window;
  const Tensor f = time_.forward(featurizer_.time_input({&ptr, 1}), Mode::Eval);
  return {f.values.begin(), f.values.end()};
}

std::vector<double> KickModel::freq_features(const Eigen::MatrixXd& window) const {
  require(uses_freq(), ErrorCode::State, "model has no time-frequency branch");
  std::lock_guard<std::mutex> lock(mutex_);
  const Eigen::MatrixXd* ptr = &window;
  const Tensor f = freq_.forward(featurizer_.freq_input({&ptr, 1}), Mode::Eval);
  return {f.values.begin(), f.values.end()};
}

FusedFeature KickModel::fused_feature(const Eigen::MatrixXd& window) const {
  require(variant_ == Variant::Fusion, ErrorCode::State, "model has no attention fusion");
  const auto ft = time_features(window);
  const auto ftf = freq_features(window);
  std::lock_guard<std::mutex> lock(mutex_);
  return attention_fuse(ft, ftf, attention_->weight.values, attention_->beta.values);
}

nn::AttentionFusion& KickModel::attention() {
  require(attention_ != nullptr, ErrorCode::State, "model has no attention fusion");
  return *attention_;
}

void KickModel::set_feature_normalization(std::vector<double> mean, std::vector<double> stddev) {
  require(is_baseline(), ErrorCode::State, "feature normalization applies to baselines only");
  require(mean.size() == feature_mean_.size() && stddev.size() == feature_mean_.size(),
          ErrorCode::InvalidArgument, "feature normalization size mismatch");
  for (double s : stddev) {
    require(s > 0.0 && std::isfinite(s), ErrorCode::InvalidArgument,
            "feature standard deviations must be positive");
  }
  feature_mean_ = std::move(mean);
  feature_std_ = std::move(stddev);
}

void KickModel::set_target_normalization(std::array<double, 2> mean,
                                         std::array<double, 2> stddev) {
  for (int i = 0; i < 2; ++i) {
    require(std::isfinite(mean[static_cast<std::size_t>(i)]) &&
                stddev[static_cast<std::size_t>(i)] > 0.0,
            ErrorCode::InvalidArgument, "target normalization must be finite and positive");
  }
  target_mean_ = mean;
  target_std_ = stddev;
}

// ---------------------------------------------------------- checkpoints

namespace {

constexpr const char* kModelFormat = "kicksense-model-1";

void put_arch(KvFile& kv, const ArchConfig& a) {
  auto z = [&](const char* key, std::size_t v) { kv.set(std::string("arch.") + key, std::to_string(v)); };
  z("window_len", a.window_len);
  z("sensors", a.sensors);
  z("conv1_channels", a.conv1_channels);
  z("conv2_channels", a.conv2_channels);
  z("conv_kernel", a.conv_kernel);
  z("conv2_stride", a.conv2_stride);
  z("lstm_hidden", a.lstm_hidden);
  z("conv2d1_channels", a.conv2d1_channels);
  z("conv2d2_channels", a.conv2d2_channels);
  z("freq_features", a.freq_features);
  z("fft_size", a.fft_size);
  z("hop", a.hop);
  z("mlp_hidden", a.mlp_hidden);
  kv.set("arch.dropout", format_double(a.dropout));
  kv.set("arch.compression_pa", format_double(a.compression_pa));
}

ArchConfig get_arch(const KvFile& kv) {
  ArchConfig a;
  auto need = [&](const char* key) {
    const auto v = kv.get(std::string("arch.") + key);
    require(v.has_value(), ErrorCode::Schema,
            std::string("checkpoint metadata lacks arch.") + key);
    return *v;
  };
  auto z = [&](const char* key) {
    const long long v = parse_int(need(key));
    require(v > 0, ErrorCode::Schema, std::string("checkpoint: arch.") + key + " must be > 0");
    return static_cast<std::size_t>(v);
  };
  a.window_len = z("window_len");
  a.sensors = z("sensors");
  a.conv1_channels = z("conv1_channels");
  a.conv2_channels = z("conv2_channels");
  a.conv_kernel = z("conv_kernel");
  a.conv2_stride = z("conv2_stride");
  a.lstm_hidden = z("lstm_hidden");
  a.conv2d1_channels = z("conv2d1_channels");
  a.conv2d2_channels = z("conv2d2_channels");
  a.freq_features = z("freq_features");
  a.fft_size = z("fft_size");
  a.hop = z("hop");
  a.mlp_hidden = z("mlp_hidden");
  a.dropout = parse_double(need("dropout"));
  a.compression_pa = parse_double(need("compression_pa"));
  return a;
}

const nn::NamedTensor& need_tensor(const nn::Checkpoint& ckpt, const std::string& name,
                                   std::size_t size) {
  const auto* t = ckpt.find(name);
  require(t != nullptr, ErrorCode::Schema, "checkpoint lacks tensor '" + name + "'");
  require(t->values.size() == size, ErrorCode::Schema,
          "checkpoint tensor '" + name + "' has the wrong size");
  return *t;
}

}  // namespace

nn::Checkpoint KickModel::to_checkpoint() const {
  std::lock_guard<std::mutex> lock(mutex_);
  KvFile kv;
  kv.set("model.format", kModelFormat);
  kv.set("model.task", task_name(task_));
  kv.set("model.variant", variant_name(variant_));
  kv.set("model.seed", std::to_string(seed_));
  kv.set("model.sample_rate_hz", format_double(fs_));
  put_arch(kv, arch_);
  std::ostringstream meta;
  kv.write(meta);
  nn::Checkpoint ckpt;
  ckpt.metadata = meta.str();
  nn::store_params(params_locked(), ckpt);
  if (is_baseline()) {
    ckpt.tensors.push_back({"norm.feature_mean", {feature_mean_.size()}, feature_mean_});
    ckpt.tensors.push_back({"norm.feature_std", {feature_std_.size()}, feature_std_});
  }
  if (task_ == Task::Localize) {
    ckpt.tensors.push_back(
        {"norm.target_mean", {2}, {target_mean_[0], target_mean_[1]}});
    ckpt.tensors.push_back({"norm.target_std", {2}, {target_std_[0], target_std_[1]}});
  }
  return ckpt;
}

std::unique_ptr<KickModel> KickModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  std::istringstream meta(ckpt.metadata);
  const KvFile kv = KvFile::parse(meta, "checkpoint metadata");
  auto need = [&](const std::string& key) {
    const auto v = kv.get(key);
    require(v.has_value(), ErrorCode::Schema, "checkpoint metadata lacks " + key);
    return *v;
  };
  require(need("model.format") == kModelFormat, ErrorCode::Schema,
          "unsupported model format '" + need("model.format") + "'");
  Task task;
  Variant variant;
  try {
    task = parse_task(need("model.task"));
    variant = parse_variant(need("model.variant"));
  } catch (const Error& e) {
    throw Error(ErrorCode::Schema, std::string("checkpoint: ") + e.what());
  }
  const auto seed = static_cast<std::uint64_t>(std::stoull(need("model.seed")));
  auto model = std::make_unique<KickModel>(task, variant, get_arch(kv), seed,
                                           parse_double(need("model.sample_rate_hz")));
  nn::load_params(model->params(), ckpt);
  if (model->is_baseline()) {
    const std::size_t f = model->feature_mean_.size();
    model->set_feature_normalization(need_tensor(ckpt, "norm.feature_mean", f).values,
                                     need_tensor(ckpt, "norm.feature_std", f).values);
  }
  if (task == Task::Localize) {
    const auto& m = need_tensor(ckpt, "norm.target_mean", 2).values;
    const auto& s = need_tensor(ckpt, "norm.target_std", 2).values;
    model->set_target_normalization({m[0], m[1]}, {s[0], s[1]});
  }
  return model;
}

void KickModel::save(const std::string& path) const { nn::write_checkpoint(path, to_checkpoint()); }

std::unique_ptr<KickModel> KickModel::load(const std::string& path) {
  return from_checkpoint(nn::read_checkpoint(path));
}

}  // namespace kicksense
