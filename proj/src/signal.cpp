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

#include "kicksense/signal.hpp"

#include <cmath>
#include <ostream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

Eigen::MatrixXd subtract_baseline(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& rest) {
  require(rest.rows() > 0, ErrorCode::InvalidArgument, "baseline rest segment is empty");
  require(rest.cols() == raw.cols(), ErrorCode::InvalidArgument,
          "baseline rest segment has a different sensor count");
  const Eigen::RowVectorXd mean = rest.colwise().mean();
  return raw.rowwise() - mean;
}

Run subtract_baseline(const Run& raw) {
  require(raw.rest_rows > 0, ErrorCode::InvalidArgument, "run has no rest segment");
  Run out = raw;
  out.pressure =
      subtract_baseline(raw.pressure, raw.pressure.topRows(static_cast<Eigen::Index>(raw.rest_rows)));
  return out;
}

WindowSet sliding_windows(const Run& corrected, const WindowingOptions& options) {
  require(options.window_len >= 1 && options.stride >= 1, ErrorCode::InvalidArgument,
          "window length and stride must be positive");
  WindowSet set;
  const std::size_t n = corrected.rows();
  if (n < options.window_len) {
    set.too_short = true;
    return set;
  }
  for (std::size_t end = options.window_len - 1; end < n; end += options.stride) {
    if (corrected.t[end] < 0.0) continue;
    if (options.clip_to_effective_region && !in_effective_region(corrected.l_x[end])) continue;
    set.spans.push_back({end, {corrected.pattern[end], corrected.l_x[end], corrected.l_y[end]}});
  }
  return set;
}

PressureWindow extract_window(const Run& run, std::size_t end_row, std::size_t window_len,
                              double sample_rate_hz) {
  require(end_row < run.rows() && end_row + 1 >= window_len, ErrorCode::InvalidArgument,
          "window does not fit inside the run");
  PressureWindow w;
  w.data = run.pressure.middleRows(static_cast<Eigen::Index>(end_row + 1 - window_len),
                                   static_cast<Eigen::Index>(window_len));
  w.t_end = run.t[end_row];
  w.sample_rate_hz = sample_rate_hz;
  return w;
}

std::vector<double> window_coefficients(WindowFunction kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowFunction::Hamming && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                    static_cast<double>(n - 1));
    }
  }
  return w;
}

FftPlan::FftPlan(std::size_t n) : n_(n), twiddle_(n) {
  for (std::size_t i = 0; i < n; ++i) {
    twiddle_[i] = std::polar(1.0, -2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }
  radix2_ = n != 0 && (n & (n - 1)) == 0;
  if (radix2_) {
    bitrev_.resize(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      bitrev_[i] = j;
    }
  }
}

void FftPlan::execute(std::complex<double>* a) const {
  const std::size_t n = n_;
  if (n <= 1) return;
  if (!radix2_) {
    scratch_.assign(a, a + n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += scratch_[j] * twiddle_[(j * k) % n];
      a[k] = acc;
    }
    return;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * twiddle_[k * step];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void fft(std::vector<std::complex<double>>& data) {
  FftPlan(data.size()).execute(data.data());
}

std::size_t StftParams::frames(std::size_t series_len) const {
  if (series_len < fft_size || hop == 0) return 0;
  return (series_len - fft_size) / hop + 1;
}

void StftParams::validate(std::size_t series_len) const {
  require(fft_size >= 1, ErrorCode::InvalidArgument, "fft size must be positive");
  require(hop >= 1, ErrorCode::InvalidArgument, "stft hop must be >= 1");
  require(fft_size <= series_len, ErrorCode::InvalidArgument,
          "fft size " + std::to_string(fft_size) + " exceeds series length " +
              std::to_string(series_len));
}

ComplexMatrix stft(std::span<const double> series, std::size_t fft_size, std::size_t hop,
                   WindowFunction window) {
  const StftParams params{fft_size, hop, window, false};
  params.validate(series.size());
  const StftPlan plan(params, series.size());
  const std::size_t frames = plan.frames();
  std::vector<double> re(frames * fft_size), im(frames * fft_size);
  plan.transform(series, re.data(), im.data());
  ComplexMatrix out(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(fft_size));
  for (std::size_t i = 0; i < re.size(); ++i) out.data()[i] = {re[i], im[i]};
  return out;
}

StftPlan::StftPlan(const StftParams& params, std::size_t series_len)
    : params_(params),
      series_len_(series_len),
      frames_(params.frames(series_len)),
      bins_(params.bins()),
      half_(params.fft_size / 2 + 1) {
  params.validate(series_len);
  const std::size_t n = params.fft_size;
  const auto w = window_coefficients(params.window, n);
  cos_.resize(n * half_);
  sin_.resize(n * half_);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < half_; ++k) {
      // Reduce the phase index first so equal angles give equal values.
      const double angle = 2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      cos_[j * half_ + k] = w[j] * std::cos(angle);
      sin_[j * half_ + k] = -w[j] * std::sin(angle);
    }
  }
}

void StftPlan::transform(std::span<const double> series, double* re, double* im) const {
  require(series.size() == series_len_, ErrorCode::InvalidArgument,
          "stft plan: series length mismatch");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(params_.fft_size);
  const auto f = static_cast<Eigen::Index>(frames_);
  const auto h = static_cast<Eigen::Index>(half_);
  // Row m of the frame matrix starts at sample m * hop.
  const Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> frames(
      series.data(), f, n, Eigen::OuterStride<>(static_cast<Eigen::Index>(params_.hop)));
  if (bins_ == half_) {
    Eigen::Map<RowMat>(re, f, h).noalias() = frames * Eigen::Map<const RowMat>(cos_.data(), n, h);
    Eigen::Map<RowMat>(im, f, h).noalias() = frames * Eigen::Map<const RowMat>(sin_.data(), n, h);
    return;
  }
  // Full spectrum: bins above N/2 mirror the lower half for real input, so
  // every bin shares its value with the one-sided transform bit for bit.
  half_re_.resize(frames_ * half_);
  half_im_.resize(frames_ * half_);
  Eigen::Map<RowMat>(half_re_.data(), f, h).noalias() =
      frames * Eigen::Map<const RowMat>(cos_.data(), n, h);
  Eigen::Map<RowMat>(half_im_.data(), f, h).noalias() =
      frames * Eigen::Map<const RowMat>(sin_.data(), n, h);
  const std::size_t nn = params_.fft_size;
  for (std::size_t m = 0; m < frames_; ++m) {
    for (std::size_t k = 0; k < nn; ++k) {
      const bool low = k < half_;
      const std::size_t src = m * half_ + (low ? k : nn - k);
      re[m * nn + k] = half_re_[src];
      im[m * nn + k] = low ? half_im_[src] : -half_im_[src];
    }
  }
}

void StftPlan::power(std::span<const double> series, double* out) const {
  re_.resize(frames_ * bins_);
  im_.resize(frames_ * bins_);
  transform(series, re_.data(), im_.data());
  for (std::size_t i = 0; i < re_.size(); ++i) out[i] = re_[i] * re_[i] + im_[i] * im_[i];
}

Spectrogram spectrogram(const Eigen::MatrixXd& data, const StftParams& params) {
  const auto len = static_cast<std::size_t>(data.rows());
  const StftPlan plan(params, len);
  Spectrogram spec;
  spec.sensors = static_cast<std::size_t>(data.cols());
  spec.frames = plan.frames();
  spec.bins = plan.bins();
  spec.params = params;
  spec.values.resize(spec.sensors * spec.frames * spec.bins);
  std::vector<double> column(len);
  for (std::size_t s = 0; s < spec.sensors; ++s) {
    for (std::size_t i = 0; i < len; ++i) {
      column[i] = data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s));
    }
    plan.power(column, spec.values.data() + s * spec.frames * spec.bins);
  }
  return spec;
}

Spectrogram spectrogram(const PressureWindow& window, const StftParams& params) {
  return spectrogram(window.data, params);
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& spec, double sample_rate_hz) {
  out << "sensor,frame,bin,time_s,frequency_hz,power\n";
  const double n = static_cast<double>(spec.params.fft_size);
  for (std::size_t s = 0; s < spec.sensors; ++s) {
    for (std::size_t m = 0; m < spec.frames; ++m) {
      // frame time is the centre of its analysis window
      const double t =
          (static_cast<double>(m * spec.params.hop) + 0.5 * (n - 1.0)) / sample_rate_hz;
      for (std::size_t k = 0; k < spec.bins; ++k) {
        out << s + 1 << ',' << m << ',' << k << ',' << format_double(t) << ','
            << format_double(static_cast<double>(k) * sample_rate_hz / n) << ','
            << format_double(spec.at(s, m, k)) << '\n';
      }
    }
  }
}

}  // namespace kicksense
