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

#include "kicksense/kinematics.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "kicksense/error.hpp"
#include "kicksense/util.hpp"

namespace kicksense {

LegState leg_deflection(const KickPattern& pattern, double amplitude_m, double t) {
  require(std::isfinite(t) && std::isfinite(amplitude_m), ErrorCode::InvalidArgument,
          "leg_deflection: non-finite time or amplitude");
  require(amplitude_m > 0.0, ErrorCode::InvalidArgument,
          "leg_deflection: amplitude must be positive");
  require(t >= 0.0, ErrorCode::InvalidArgument, "leg_deflection: time must be >= 0");
  const double omega_t = 2.0 * kPi * pattern.frequency_hz * t;
  return {t, amplitude_m * std::sin(omega_t + pattern.phase_left),
          amplitude_m * std::sin(omega_t + pattern.phase_right)};
}

const std::array<KickPattern, kPatternCount>& pattern_set() {
  static const std::array<KickPattern, kPatternCount> patterns = {{
      {PatternId::S1, 1.0, 0.0, 0.0, KickStyle::Dolphin},
      {PatternId::S2, 1.0, 0.0, kPi, KickStyle::Flutter},
      {PatternId::S3, 1.5, 0.0, 0.0, KickStyle::Dolphin},
      {PatternId::S4, 1.5, 0.0, kPi, KickStyle::Flutter},
      {PatternId::S5, 2.0, 0.0, 0.0, KickStyle::Dolphin},
      {PatternId::S6, 2.0, 0.0, kPi, KickStyle::Flutter},
  }};
  return patterns;
}

const KickPattern& pattern_for(PatternId id) {
  return pattern_set()[static_cast<std::size_t>(pattern_index(id))];
}

int pattern_index(PatternId id) noexcept { return static_cast<int>(id); }

PatternId pattern_from_index(int index) {
  require(index >= 0 && index < kPatternCount, ErrorCode::InvalidArgument,
          "pattern index out of range: " + std::to_string(index));
  return static_cast<PatternId>(index);
}

std::string pattern_name(PatternId id) {
  return "s" + std::to_string(pattern_index(id) + 1);
}

PatternId parse_pattern_name(std::string_view name) {
  if (name.size() == 2 && (name[0] == 's' || name[0] == 'S') && name[1] >= '1' &&
      name[1] <= '6') {
    return pattern_from_index(name[1] - '1');
  }
  fail(ErrorCode::Parse, "unknown pattern id '" + std::string(name) + "'");
}

const char* style_name(KickStyle style) noexcept {
  return style == KickStyle::Dolphin ? "dolphin" : "flutter";
}

bool is_consistent(const KickPattern& pattern) noexcept {
  if (!(pattern.frequency_hz > 0.0)) return false;
  const double dphi = std::abs(pattern.phase_left - pattern.phase_right);
  if (pattern.style == KickStyle::Dolphin) return dphi <= 1e-12;
  return std::abs(dphi - kPi) <= 1e-12;
}

void write_pattern_config(std::ostream& out,
                          const std::array<KickPattern, kPatternCount>& patterns) {
  out << "id,frequency_hz,phase_left,phase_right\n";
  for (const auto& p : patterns) {
    out << pattern_name(p.id) << ',' << format_double(p.frequency_hz) << ','
        << format_double(p.phase_left) << ',' << format_double(p.phase_right) << '\n';
  }
}

std::vector<KickPattern> read_pattern_config(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Parse,
          "pattern config: missing header");
  require(trim(line) == "id,frequency_hz,phase_left,phase_right", ErrorCode::Schema,
          "pattern config: unexpected header '" + line + "'");
  std::vector<KickPattern> patterns;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    require(fields.size() == 4, ErrorCode::Parse,
            "pattern config line " + std::to_string(line_no) + ": expected 4 fields");
    KickPattern p;
    p.id = parse_pattern_name(trim(fields[0]));
    p.frequency_hz = parse_double(fields[1], line_no);
    p.phase_left = parse_double(fields[2], line_no);
    p.phase_right = parse_double(fields[3], line_no);
    p.style = std::abs(p.phase_left - p.phase_right) <= 1e-12 ? KickStyle::Dolphin
                                                               : KickStyle::Flutter;
    require(is_consistent(p), ErrorCode::Validation,
            "pattern config line " + std::to_string(line_no) +
                ": phase difference must be 0 or pi and frequency positive");
    patterns.push_back(p);
  }
  return patterns;
}

}  // namespace kicksense
