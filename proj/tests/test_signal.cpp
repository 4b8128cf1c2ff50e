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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/signal.hpp"
#include "support.hpp"

using namespace kicksense;
using cd = std::complex<double>;

namespace {

// Direct per-frame DFT in long double.
std::vector<std::vector<std::complex<long double>>> naive_stft(const std::vector<double>& x,
                                                               std::size_t n, std::size_t hop,
                                                               const std::vector<double>& w) {
  std::vector<std::vector<std::complex<long double>>> out;
  const long double two_pi = 6.283185307179586476925286766559L;
  for (std::size_t m = 0; m * hop + n <= x.size(); ++m) {
    std::vector<std::complex<long double>> row(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<long double> s = 0.0L;
      for (std::size_t j = 0; j < n; ++j) {
        const long double ang = -two_pi * static_cast<long double>((j * k) % n) / static_cast<long double>(n);
        s += static_cast<long double>(w[j]) * static_cast<long double>(x[m * hop + j]) *
             std::complex<long double>(std::cos(ang), std::sin(ang));
      }
      row[k] = s;
    }
    out.push_back(row);
  }
  return out;
}

Run synthetic_run(std::size_t rest, std::size_t motion, double l_x0, double dx) {
  Run r;
  const std::size_t n = rest + motion;
  r.pressure.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    r.t.push_back((static_cast<double>(i) - static_cast<double>(rest)) / 25.0);
    r.l_x.push_back(l_x0 + dx * static_cast<double>(i));
    r.l_y.push_back(60.0);
    r.pattern.push_back(i % 7 == 0 ? PatternId::S3 : PatternId::S4);
    for (Eigen::Index s = 0; s < 3; ++s) {
      r.pressure(static_cast<Eigen::Index>(i), s) = 100.0 * static_cast<double>(s + 1) + std::sin(0.1 * static_cast<double>(i) + static_cast<double>(s));
    }
  }
  r.rest_rows = rest;
  return r;
}

}  // namespace

TEST_CASE("baseline subtraction is per sensor") {
  Eigen::MatrixXd raw(4, 2);
  raw << 5, 100, 5, 102, 5, 98, 5, 107;
  const Eigen::MatrixXd out = subtract_baseline(raw, raw.topRows(3));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(out(i, 0) == 0.0);
  CHECK(out(3, 1) == 7.0);
  CHECK(out(0, 1) == 0.0);

  Rng rng(31);
  Eigen::MatrixXd r(50, 3);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform(-50, 50) + 1000.0;
  const Eigen::MatrixXd c = subtract_baseline(r, r.topRows(20));
  for (Eigen::Index s = 0; s < 3; ++s) {
    long double mean = 0.0L;
    for (Eigen::Index i = 0; i < 20; ++i) mean += r(i, s);
    mean /= 20.0L;
    for (Eigen::Index i = 0; i < 50; ++i) {
      CHECK(std::abs(c(i, s) - static_cast<double>(r(i, s) - mean)) < 1e-10);
    }
  }
  CHECK_THROWS_AS(subtract_baseline(r, r.topRows(0)), Error);
  Run no_rest = synthetic_run(0, 10, 0, 0);
  CHECK_THROWS_AS(subtract_baseline(no_rest), Error);
}

TEST_CASE("sliding window counts and labels") {
  WindowingOptions o;
  o.stride = 1;
  o.clip_to_effective_region = false;
  const Run r100 = synthetic_run(0, 100, 0, 0);
  CHECK(sliding_windows(r100, o).spans.size() == 1);
  const Run r109 = synthetic_run(0, 109, 0, 0);
  const auto set = sliding_windows(r109, o);
  REQUIRE(set.spans.size() == 10);
  for (const auto& s : set.spans) {
    CHECK(s.label.pattern == r109.pattern[s.end_row]);
    CHECK(s.label.l_x == r109.l_x[s.end_row]);
  }
  const Run short_run = synthetic_run(0, 60, 0, 0);
  const auto none = sliding_windows(short_run, o);
  CHECK(none.too_short);
  CHECK(none.spans.empty());
}

TEST_CASE("windows skip the rest segment and clip to the effective region") {
  WindowingOptions o;
  o.stride = 5;
  const Run r = synthetic_run(150, 400, -150.0, 1.0);
  const auto set = sliding_windows(r, o);
  REQUIRE(!set.spans.empty());
  for (const auto& s : set.spans) {
    CHECK(r.t[s.end_row] >= 0.0);
    CHECK(std::abs(s.label.l_x) <= 100.0);
    CHECK((s.end_row - 99) % 5 == 0);
  }
  const PressureWindow w = extract_window(r, set.spans[0].end_row, 100, 25.0);
  CHECK(w.length() == 100);
  CHECK(w.sensors() == 3);
  CHECK(w.data(99, 2) == r.pressure(static_cast<Eigen::Index>(set.spans[0].end_row), 2));
  CHECK(w.t_end == r.t[set.spans[0].end_row]);
  CHECK_THROWS_AS(extract_window(r, 50, 100, 25.0), Error);
}

TEST_CASE("hamming coefficients") {
  const auto w = window_coefficients(WindowFunction::Hamming, 32);
  CHECK(std::abs(w.front() - 0.08) < 1e-12);
  CHECK(std::abs(w.back() - 0.08) < 1e-12);
  for (std::size_t n = 0; n < 32; ++n) {
    CHECK(std::abs(w[n] - (0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / 31.0))) < 1e-15);
  }
  for (double v : window_coefficients(WindowFunction::Rectangular, 7)) CHECK(v == 1.0);
}

TEST_CASE("fft matches a naive DFT") {
  Rng rng(32);
  for (std::size_t n : {1u, 2u, 8u, 12u, 32u, 100u, 128u}) {
    std::vector<cd> x(n);
    for (auto& v : x) v = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
    auto y = x;
    fft(y);
    for (std::size_t k = 0; k < n; ++k) {
      cd s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += x[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n));
      CHECK(std::abs(s - y[k]) < 1e-11 * static_cast<double>(n));
    }
  }
}

TEST_CASE("stft matches per-frame DFT oracle") {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t len = 32 + rng.below(69);
    const std::size_t n = 4 + rng.below(29);
    const std::size_t hop = 1 + rng.below(4);
    std::vector<double> x(len);
    for (double& v : x) v = rng.uniform(-10, 10);
    const auto X = stft(x, n, hop, WindowFunction::Hamming);
    const auto ref = naive_stft(x, n, hop, window_coefficients(WindowFunction::Hamming, n));
    REQUIRE(static_cast<std::size_t>(X.rows()) == ref.size());
    REQUIRE(static_cast<std::size_t>(X.cols()) == n);
    long double err = 0.0L, norm = 0.0L;
    for (std::size_t m = 0; m < ref.size(); ++m)
      for (std::size_t k = 0; k < n; ++k) {
        const std::complex<long double> got(X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)).real(),
                                            X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)).imag());
        err += std::norm(got - ref[m][k]);
        norm += std::norm(ref[m][k]);
      }
    CHECK(static_cast<double>(std::sqrt(err / norm)) < 1e-9);
  }
}

TEST_CASE("stft edge cases") {
  const std::vector<double> zeros(40, 0.0);
  const auto Z = stft(zeros, 32, 1, WindowFunction::Hamming);
  CHECK(Z.rows() == 9);
  for (Eigen::Index i = 0; i < Z.size(); ++i) CHECK(Z.data()[i] == cd(0.0, 0.0));

  std::vector<double> tone(32);
  for (std::size_t j = 0; j < 32; ++j) tone[j] = std::cos(2.0 * kPi * 5.0 * static_cast<double>(j) / 32.0);
  const auto T = stft(tone, 32, 1, WindowFunction::Rectangular);
  REQUIRE(T.rows() == 1);
  for (Eigen::Index k = 0; k <= 16; ++k) {
    if (k != 5) CHECK(std::abs(T(0, k)) < std::abs(T(0, 5)));
  }
  CHECK(std::abs(T(0, 5)) == doctest::Approx(16.0).epsilon(1e-12));

  CHECK_THROWS_AS(stft(std::vector<double>(20, 1.0), 32, 1, WindowFunction::Hamming), Error);
  CHECK_THROWS_AS(stft(std::vector<double>(40, 1.0), 32, 0, WindowFunction::Hamming), Error);
}

TEST_CASE("stft linearity and parseval") {
  Rng rng(34);
  std::vector<double> x(100), y(100), z(100);
  for (std::size_t i = 0; i < 100; ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = rng.uniform(-1, 1);
    z[i] = 2.5 * x[i] - 0.75 * y[i];
  }
  const auto X = stft(x, 32, 1, WindowFunction::Hamming);
  const auto Y = stft(y, 32, 1, WindowFunction::Hamming);
  const auto Zs = stft(z, 32, 1, WindowFunction::Hamming);
  CHECK((Zs - (2.5 * X - 0.75 * Y)).cwiseAbs().maxCoeff() < 1e-9);

  const auto R = stft(x, 32, 3, WindowFunction::Rectangular);
  for (Eigen::Index m = 0; m < R.rows(); ++m) {
    double lhs = 0.0, rhs = 0.0;
    for (Eigen::Index k = 0; k < 32; ++k) lhs += std::norm(R(m, k));
    for (std::size_t j = 0; j < 32; ++j) rhs += x[static_cast<std::size_t>(m) * 3 + j] * x[static_cast<std::size_t>(m) * 3 + j];
    CHECK(lhs == doctest::Approx(32.0 * rhs).epsilon(1e-6));
  }
}

TEST_CASE("spectrogram equals squared stft magnitude") {
  Rng rng(35);
  Eigen::MatrixXd data(100, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.uniform(-20, 20);
  StftParams full;
  full.onesided = false;
  const Spectrogram s = spectrogram(data, full);
  StftParams half;
  const Spectrogram h = spectrogram(data, half);
  CHECK(h.frames == 69);
  CHECK(h.bins == 17);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> col(100);
    for (std::size_t i = 0; i < 100; ++i) col[i] = data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    const auto X = stft(col, 32, 1, WindowFunction::Hamming);
    for (std::size_t m = 0; m < s.frames; ++m)
      for (std::size_t k = 0; k < 32; ++k) {
        const cd v = X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        CHECK(s.at(c, m, k) == v.real() * v.real() + v.imag() * v.imag());
        CHECK(s.at(c, m, k) >= 0.0);
        if (k >= 1) CHECK(std::abs(s.at(c, m, k) - s.at(c, m, 32 - k)) <= 1e-9 * (1.0 + s.at(c, m, k)));
        if (k < 17) CHECK(h.at(c, m, k) == s.at(c, m, k));
      }
  }
  const Spectrogram zero = spectrogram(Eigen::MatrixXd::Zero(100, 3), half);
  for (double v : zero.values) CHECK(v == 0.0);
}

TEST_CASE("2 Hz kick peaks in bin 3 at N = 32") {
  Eigen::MatrixXd data(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i)
    for (Eigen::Index s = 0; s < 3; ++s)
      data(i, s) = 10.0 * std::sin(2.0 * kPi * 2.0 * static_cast<double>(i) / 25.0 + 0.3 * static_cast<double>(s));
  const Spectrogram spec = spectrogram(data, StftParams{});
  const std::size_t expect = static_cast<std::size_t>(std::lround(2.0 * 32.0 / 25.0));
  CHECK(expect == 3);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t m = 0; m < spec.frames; ++m) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < spec.bins; ++k)
        if (spec.at(s, m, k) > spec.at(s, m, best)) best = k;
      CHECK(best == expect);
    }
}

TEST_CASE("spectrogram CSV is long format") {
  Eigen::MatrixXd data = Eigen::MatrixXd::Ones(40, 2);
  const Spectrogram spec = spectrogram(data, StftParams{});
  std::ostringstream out;
  write_spectrogram_csv(out, spec, 25.0);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "sensor,frame,bin,time_s,frequency_hz,power");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * spec.frames * 17);
}
