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

#include "kicksense/flowsim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

std::size_t SensorGeometry::midline_index() const {
  validate();
  std::size_t best = 0;
  for (std::size_t i = 1; i < angular_positions.size(); ++i) {
    if (std::abs(angular_positions[i]) < std::abs(angular_positions[best])) best = i;
  }
  return best;
}

void SensorGeometry::validate() const {
  require(!angular_positions.empty(), ErrorCode::InvalidGeometry,
          "sensor geometry needs at least one port");
  for (std::size_t i = 1; i < angular_positions.size(); ++i) {
    require(angular_positions[i] > angular_positions[i - 1], ErrorCode::InvalidGeometry,
            "sensor angular positions must be strictly increasing");
  }
  require(cylinder_radius_m > 0.0 && std::isfinite(cylinder_radius_m),
          ErrorCode::InvalidGeometry, "cylinder radius must be positive");
  require(std::isfinite(sensor_depth_offset_m), ErrorCode::InvalidGeometry,
          "sensor depth offset must be finite");
}

std::size_t SimConfig::rest_samples() const {
  return static_cast<std::size_t>(std::llround(rest_duration_s * sample_rate_hz));
}

void SimConfig::validate() const {
  require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), ErrorCode::Config,
          "sample_rate_hz must be positive");
  require(noise_std_pa >= 0.0 && std::isfinite(noise_std_pa), ErrorCode::Config,
          "noise_std_pa must be >= 0");
  require(decay_length_m > 0.0 && std::isfinite(decay_length_m), ErrorCode::Config,
          "decay_length_m must be positive");
  require(std::isfinite(source_strength) && source_strength >= 0.0, ErrorCode::Config,
          "source_strength must be finite and >= 0");
  require(lateral_speed_mm_per_min > 0.0, ErrorCode::Config,
          "lateral_speed_mm_per_min must be positive");
  require(amplitude_m > 0.0, ErrorCode::Config, "amplitude_m must be positive");
  require(leg_spacing_m >= 0.0, ErrorCode::Config, "leg_spacing_m must be >= 0");
  require(wave_speed_m_s > 0.0, ErrorCode::Config, "wave_speed_m_s must be positive");
  require(reference_frequency_hz > 0.0, ErrorCode::Config,
          "reference_frequency_hz must be positive");
  require(rest_samples() >= 1, ErrorCode::Config,
          "rest segment must contain at least one sample for baseline estimation");
  require(static_pressure_pa == std::round(static_pressure_pa), ErrorCode::Config,
          "static_pressure_pa must be an integer number of Pa");
}

void Trajectory::validate() const {
  require(!samples.empty(), ErrorCode::InvalidArgument, "trajectory is empty");
  require(samples.front().t >= 0.0, ErrorCode::InvalidArgument,
          "trajectory must start at t >= 0");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(std::isfinite(s.t) && std::isfinite(s.l_x) && std::isfinite(s.l_y),
            ErrorCode::InvalidArgument, "trajectory contains non-finite values");
    require(s.l_y > 0.0, ErrorCode::InvalidGeometry, "L_y must be positive");
    if (i > 0) {
      require(s.t > samples[i - 1].t, ErrorCode::InvalidArgument,
              "trajectory timestamps must be strictly increasing");
    }
  }
}

PatternId Run::run_pattern() const {
  require(!pattern.empty(), ErrorCode::State, "run has no rows");
  return pattern[std::min(rest_rows, pattern.size() - 1)];
}

void Run::validate() const {
  const std::size_t n = t.size();
  require(static_cast<std::size_t>(pressure.rows()) == n && l_x.size() == n &&
              l_y.size() == n && pattern.size() == n,
          ErrorCode::Validation, "run columns have inconsistent lengths");
  require(pressure.cols() >= 1, ErrorCode::Validation, "run has no pressure columns");
  require(rest_rows <= n, ErrorCode::Validation, "rest segment longer than run");
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      require(t[i] > t[i - 1], ErrorCode::Validation,
              "timestamps must be strictly increasing (row " + std::to_string(i) + ")");
    }
    require((t[i] < 0.0) == (i < rest_rows), ErrorCode::Validation,
            "rest rows must be exactly the rows with t < 0");
  }
}

bool Run::operator==(const Run& other) const {
  return t == other.t && pressure.rows() == other.pressure.rows() &&
         pressure.cols() == other.pressure.cols() && pressure == other.pressure &&
         l_x == other.l_x && l_y == other.l_y && pattern == other.pattern &&
         rest_rows == other.rest_rows;
}

namespace {

struct Point3 {
  double x, y, z;
};

double distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Point3 port_position(const SensorGeometry& g, std::size_t i) {
  const double theta = g.angular_positions[i];
  return {g.cylinder_radius_m * std::sin(theta), g.cylinder_radius_m * std::cos(theta), 0.0};
}

const PatternSegment& segment_at(const std::vector<PatternSegment>& schedule, double tau) {
  auto it = std::upper_bound(schedule.begin(), schedule.end(), tau,
                             [](double v, const PatternSegment& s) { return v < s.start_time; });
  return *(it == schedule.begin() ? it : std::prev(it));
}

void validate_schedule(const std::vector<PatternSegment>& schedule) {
  require(!schedule.empty(), ErrorCode::InvalidArgument, "pattern schedule is empty");
  require(schedule.front().start_time == 0.0, ErrorCode::InvalidArgument,
          "pattern schedule must start at t = 0");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    require(schedule[i].start_time > schedule[i - 1].start_time, ErrorCode::InvalidArgument,
            "pattern schedule start times must be strictly increasing");
  }
}

std::uint64_t noise_key(std::uint64_t seed, long long sample_index, std::size_t sensor) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(sample_index)), sensor);
}

double quantize(double pa) { return std::round(pa) + 0.0; }

double port_static_pressure(const SimConfig& c, std::size_t sensor) {
  return c.static_pressure_pa + 7.0 * static_cast<double>(sensor);
}

}  // namespace

double clean_pressure(const std::vector<PatternSegment>& schedule,
                      const SensorGeometry& geometry, const SimConfig& config,
                      double l_x_mm, double l_y_mm, double t, std::size_t sensor_index) {
  require(l_y_mm > 0.0, ErrorCode::InvalidGeometry, "L_y must be positive");
  require(sensor_index < geometry.sensor_count(), ErrorCode::InvalidArgument,
          "sensor index out of range");
  require(std::isfinite(l_x_mm) && std::isfinite(l_y_mm) && std::isfinite(t),
          ErrorCode::InvalidArgument, "non-finite simulation input");

  const Point3 port = port_position(geometry, sensor_index);
  const double tip_y = geometry.cylinder_radius_m + l_y_mm * 1e-3;
  const double half_spacing = 0.5 * config.leg_spacing_m;
  const Point3 legs[2] = {{l_x_mm * 1e-3 - half_spacing, tip_y, geometry.sensor_depth_offset_m},
                          {l_x_mm * 1e-3 + half_spacing, tip_y, geometry.sensor_depth_offset_m}};

  double total = 0.0;
  for (int leg = 0; leg < 2; ++leg) {
    const double r = distance(port, legs[leg]);
    const double tau = t - r / config.wave_speed_m_s;
    if (tau < 0.0) continue;  // the kick has not reached this port yet
    const auto& seg = segment_at(schedule, tau);
    const KickPattern& p = pattern_for(seg.pattern);
    const LegState state = leg_deflection(p, config.amplitude_m, tau - seg.start_time);
    const double a = leg == 0 ? state.a_left : state.a_right;
    const double gain = config.source_strength * (p.frequency_hz / config.reference_frequency_hz) *
                        std::exp(-r / config.decay_length_m) / (r * r);
    total += gain * a / config.amplitude_m;
  }
  return total;
}

double pressure_at_sensor(const KickPattern& pattern, const SensorGeometry& geometry,
                          const SimConfig& config, double l_x_mm, double l_y_mm, double t,
                          std::size_t sensor_index) {
  require(t >= 0.0, ErrorCode::InvalidArgument, "pressure_at_sensor: t must be >= 0");
  const std::vector<PatternSegment> schedule{{0.0, pattern.id}};
  const double clean =
      clean_pressure(schedule, geometry, config, l_x_mm, l_y_mm, t, sensor_index);
  const long long sample = std::llround(t * config.sample_rate_hz);
  const double noise =
      config.noise_std_pa > 0.0
          ? config.noise_std_pa * keyed_normal(noise_key(config.seed, sample, sensor_index))
          : 0.0;
  return quantize(clean + noise);
}

Run simulate_schedule(const std::vector<PatternSegment>& schedule,
                      const SensorGeometry& geometry, const SimConfig& config,
                      const Trajectory& trajectory) {
  geometry.validate();
  config.validate();
  trajectory.validate();
  validate_schedule(schedule);

  const std::size_t n_rest = config.rest_samples();
  const std::size_t n_motion = trajectory.samples.size();
  const std::size_t n = n_rest + n_motion;
  const std::size_t n_s = geometry.sensor_count();

  Run run;
  run.t.resize(n);
  run.l_x.resize(n);
  run.l_y.resize(n);
  run.pattern.resize(n);
  run.pressure.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_s));
  run.rest_rows = n_rest;

  const auto& first = trajectory.samples.front();
  for (std::size_t k = 0; k < n_rest; ++k) {
    const long long sample = static_cast<long long>(k) - static_cast<long long>(n_rest);
    run.t[k] = static_cast<double>(sample) / config.sample_rate_hz;
    run.l_x[k] = first.l_x;
    run.l_y[k] = first.l_y;
    run.pattern[k] = schedule.front().pattern;
    for (std::size_t s = 0; s < n_s; ++s) {
      const double noise = config.noise_std_pa > 0.0
                               ? config.noise_std_pa *
                                     keyed_normal(noise_key(config.seed, sample, s))
                               : 0.0;
      run.pressure(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(s)) =
          port_static_pressure(config, s) + quantize(noise);
    }
  }

  for (std::size_t j = 0; j < n_motion; ++j) {
    const auto& ts = trajectory.samples[j];
    const std::size_t row = n_rest + j;
    run.t[row] = ts.t;
    run.l_x[row] = ts.l_x;
    run.l_y[row] = ts.l_y;
    run.pattern[row] = segment_at(schedule, ts.t).pattern;
    const long long sample = std::llround(ts.t * config.sample_rate_hz);
    for (std::size_t s = 0; s < n_s; ++s) {
      const double clean = clean_pressure(schedule, geometry, config, ts.l_x, ts.l_y, ts.t, s);
      const double noise = config.noise_std_pa > 0.0
                               ? config.noise_std_pa *
                                     keyed_normal(noise_key(config.seed, sample, s))
                               : 0.0;
      run.pressure(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(s)) =
          port_static_pressure(config, s) + quantize(clean + noise);
    }
  }
  return run;
}

Run simulate_run(const KickPattern& pattern, const SensorGeometry& geometry,
                 const SimConfig& config, const Trajectory& trajectory) {
  return simulate_schedule({{0.0, pattern.id}}, geometry, config, trajectory);
}

Trajectory sweep_trajectory(const SimConfig& config, double l_y_mm) {
  config.validate();
  const double speed = config.lateral_speed_mm_per_min / 60.0;  // mm/s
  const double leg_time = 2.0 * kSweepHalfRangeMm / speed;
  const auto n = static_cast<std::size_t>(std::llround(2.0 * leg_time * config.sample_rate_hz));
  Trajectory traj;
  traj.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / config.sample_rate_hz;
    const double l_x = t <= leg_time ? -kSweepHalfRangeMm + speed * t
                                     : kSweepHalfRangeMm - speed * (t - leg_time);
    traj.samples.push_back({t, l_x, l_y_mm});
  }
  return traj;
}

Run sweep_experiment(const KickPattern& pattern, const SensorGeometry& geometry,
                     const SimConfig& config, double l_y_mm) {
  const double level = l_y_mm / 20.0;
  require(level >= 1.0 && level <= 10.0 && level == std::round(level),
          ErrorCode::InvalidArgument, "L_y must be one of 20, 40, ..., 200 mm");
  return simulate_run(pattern, geometry, config, sweep_trajectory(config, l_y_mm));
}

bool in_effective_region(double l_x_mm) noexcept {
  return l_x_mm >= -kEffectiveHalfWidthMm && l_x_mm <= kEffectiveHalfWidthMm;
}

void write_run_csv(std::ostream& out, const Run& run) {
  out << 't';
  for (std::size_t s = 0; s < run.sensors(); ++s) out << ",p" << s + 1;
  out << ",L_x,L_y,pattern_id\n";
  for (std::size_t i = 0; i < run.rows(); ++i) {
    out << format_double(run.t[i]);
    for (std::size_t s = 0; s < run.sensors(); ++s) {
      out << ',' << format_double(run.pressure(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(s)));
    }
    out << ',' << format_double(run.l_x[i]) << ',' << format_double(run.l_y[i]) << ','
        << pattern_name(run.pattern[i]) << '\n';
  }
}

}  // namespace kicksense
