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
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "kicksense/flowsim.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

inline constexpr std::size_t kWindowLength = 100;

struct PressureWindow {
  Eigen::MatrixXd data;  // N_d x N_s, baseline corrected (Pa)
  double t_end = 0.0;
  double sample_rate_hz = 25.0;

  std::size_t length() const noexcept { return static_cast<std::size_t>(data.rows()); }
  std::size_t sensors() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

/// Subtracts each column's mean over `rest` from the whole column.
Eigen::MatrixXd subtract_baseline(const Eigen::MatrixXd& raw, const Eigen::MatrixXd& rest);

/// Baseline correction of a run using its own at-rest rows.
Run subtract_baseline(const Run& raw);

struct WindowLabel {
  PatternId pattern = PatternId::S1;
  double l_x = 0.0;
  double l_y = 0.0;
};

struct WindowSpan {
  std::size_t end_row = 0;  // inclusive
  WindowLabel label;
};

struct WindowingOptions {
  std::size_t window_len = kWindowLength;
  std::size_t stride = 5;
  bool clip_to_effective_region = true;
};

struct WindowSet {
  std::vector<WindowSpan> spans;
  bool too_short = false;  // run shorter than one window
};

/// Windows end at rows window_len-1, window_len-1+stride, ... and carry the
/// label of their final row. Windows ending in the rest segment, or outside
/// the effective lateral region when clipping, are dropped.
WindowSet sliding_windows(const Run& corrected, const WindowingOptions& options);

PressureWindow extract_window(const Run& run, std::size_t end_row, std::size_t window_len,
                              double sample_rate_hz);

enum class WindowFunction { Rectangular, Hamming };

/// w(n) = 0.54 - 0.46 cos(2 pi n / (N - 1)) for Hamming; ones for rectangular.
std::vector<double> window_coefficients(WindowFunction kind, std::size_t n);

class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  std::size_t size() const noexcept { return n_; }
  void execute(std::complex<double>* data) const;

 private:
  std::size_t n_;
  bool radix2_ = false;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::size_t> bitrev_;
  mutable std::vector<std::complex<double>> scratch_;
};

/// In-place FFT. Power-of-two sizes use iterative radix-2; other sizes fall
/// back to a direct transform with a precomputed twiddle table.
void fft(std::vector<std::complex<double>>& data);

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                    Eigen::RowMajor>;

/// X(m, k) = sum_n w(n) x(n + m r) exp(-j 2 pi n k / N) for every frame with
/// m r + N <= len(x). Returns frames x N.
ComplexMatrix stft(std::span<const double> series, std::size_t fft_size, std::size_t hop,
                   WindowFunction window);

struct StftParams {
  std::size_t fft_size = 32;
  std::size_t hop = 1;
  WindowFunction window = WindowFunction::Hamming;
  bool onesided = true;  // keep bins 0..N/2 only

  std::size_t frames(std::size_t series_len) const;
  std::size_t bins() const noexcept { return onesided ? fft_size / 2 + 1 : fft_size; }
  void validate(std::size_t series_len) const;
};

struct Spectrogram {
  std::size_t sensors = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  StftParams params;
  std::vector<double> values;  // [sensor][frame][bin]

  double at(std::size_t s, std::size_t m, std::size_t k) const {
    return values[(s * frames + m) * bins + k];
  }
};

/// S(m, k) = |X(m, k)|^2 per sensor column.
Spectrogram spectrogram(const Eigen::MatrixXd& data, const StftParams& params);
Spectrogram spectrogram(const PressureWindow& window, const StftParams& params);

/// Cached plan for repeated transforms of equal-length real series. Frames
/// are evaluated as one product with a windowed DFT basis over bins 0..N/2;
/// the upper bins of a full spectrum are their conjugate mirror. Every bin is
/// therefore computed the same way for stft() and power().
class StftPlan {
 public:
  StftPlan(const StftParams& params, std::size_t series_len);
  std::size_t frames() const noexcept { return frames_; }
  std::size_t bins() const noexcept { return bins_; }
  /// Writes frames() * bins() real and imaginary parts, row-major [m][k].
  void transform(std::span<const double> series, double* re, double* im) const;
  /// Writes frames() * bins() power values for one series.
  void power(std::span<const double> series, double* out) const;

 private:
  StftParams params_;
  std::size_t series_len_;
  std::size_t frames_;
  std::size_t bins_;
  std::size_t half_;         // N/2 + 1
  AlignedVector cos_;  // [N, N/2 + 1], window folded in
  AlignedVector sin_;  // [N, N/2 + 1], negated sine
  mutable AlignedVector re_, im_, half_re_, half_im_;
};

/// Long-format CSV: sensor,frame,bin,time_s,frequency_hz,power.
void write_spectrogram_csv(std::ostream& out, const Spectrogram& spec, double sample_rate_hz);

}  // namespace kicksense
