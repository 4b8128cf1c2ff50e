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
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kicksense/kinematics.hpp"

namespace kicksense {

// Pressure ports on a vertical cylinder. Angles are measured from the axis
// pointing at the legs; the port at angle 0 is the midline sensor.
struct SensorGeometry {
  std::vector<double> angular_positions{-kPi / 4.0, 0.0, kPi / 4.0};
  double cylinder_radius_m = 0.04;
  double sensor_depth_offset_m = 0.0;

  std::size_t sensor_count() const noexcept { return angular_positions.size(); }
  std::size_t midline_index() const;
  void validate() const;
};

// Surrogate flow parameters. Each leg tip acts as an oscillating point source
// whose pressure at distance r is
//   source_strength * (f / reference_frequency_hz) * exp(-r / decay_length_m) / r^2
//   * a_leg(t - r / wave_speed_m_s) / amplitude_m
// and the two legs superpose.
struct SimConfig {
  double sample_rate_hz = 25.0;
  double noise_std_pa = 2.0;
  double decay_length_m = 0.15;
  double source_strength = 0.75;  // Pa m^2 at the reference frequency
  double lateral_speed_mm_per_min = 500.0;
  std::uint64_t seed = 1;

  double amplitude_m = kDefaultAmplitudeM;
  double leg_spacing_m = 0.03;
  double wave_speed_m_s = 0.5;
  double reference_frequency_hz = 1.0;
  double rest_duration_s = 8.0;
  double static_pressure_pa = 102300.0;  // integer Pa; port i adds 7*i Pa

  std::size_t rest_samples() const;
  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;    // seconds since motion start
  double l_x = 0.0;  // mm
  double l_y = 0.0;  // mm
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  void validate() const;
};

// Pattern active from start_time (seconds since motion start) onwards.
struct PatternSegment {
  double start_time = 0.0;
  PatternId pattern = PatternId::S1;
};

// A recorded or simulated run. Rows with t < 0 form the at-rest segment that
// precedes the motion; kicking and lateral motion start at t = 0.
struct Run {
  std::vector<double> t;
  Eigen::MatrixXd pressure;  // rows x sensors, Pa
  std::vector<double> l_x;   // mm
  std::vector<double> l_y;   // mm
  std::vector<PatternId> pattern;
  std::size_t rest_rows = 0;

  std::size_t rows() const noexcept { return t.size(); }
  std::size_t sensors() const noexcept { return static_cast<std::size_t>(pressure.cols()); }
  PatternId run_pattern() const;
  void validate() const;

  bool operator==(const Run& other) const;
};

inline constexpr double kSweepHalfRangeMm = 175.0;
inline constexpr double kEffectiveHalfWidthMm = 100.0;

/// Dynamic (gauge) pressure at one port, quantized to 1 Pa. `t` is the time
/// since kick start; the noise draw is keyed by (seed, sample index, port) so
/// it is reproducible independent of call order.
double pressure_at_sensor(const KickPattern& pattern, const SensorGeometry& geometry,
                          const SimConfig& config, double l_x_mm, double l_y_mm, double t,
                          std::size_t sensor_index);

/// Noise-free pressure before quantization; the building block of
/// pressure_at_sensor.
double clean_pressure(const std::vector<PatternSegment>& schedule,
                      const SensorGeometry& geometry, const SimConfig& config,
                      double l_x_mm, double l_y_mm, double t, std::size_t sensor_index);

Run simulate_run(const KickPattern& pattern, const SensorGeometry& geometry,
                 const SimConfig& config, const Trajectory& trajectory);

/// Like simulate_run but the kick pattern may switch mid-run.
Run simulate_schedule(const std::vector<PatternSegment>& schedule,
                      const SensorGeometry& geometry, const SimConfig& config,
                      const Trajectory& trajectory);

/// Back-and-forth lateral sweep -175 -> 175 -> -175 mm at the configured speed.
Trajectory sweep_trajectory(const SimConfig& config, double l_y_mm);

Run sweep_experiment(const KickPattern& pattern, const SensorGeometry& geometry,
                     const SimConfig& config, double l_y_mm);

bool in_effective_region(double l_x_mm) noexcept;

// CSV with header "t,p1,...,pN,L_x,L_y,pattern_id".
void write_run_csv(std::ostream& out, const Run& run);

}  // namespace kicksense
