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

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kicksense {

inline constexpr int kPatternCount = 6;
inline constexpr double kPi = 3.14159265358979323846;

enum class KickStyle { Dolphin, Flutter };

// Pattern identifiers s1..s6, stored zero-based (S1 == 0).
enum class PatternId : int { S1 = 0, S2, S3, S4, S5, S6 };

struct KickPattern {
  PatternId id = PatternId::S1;
  double frequency_hz = 1.0;
  double phase_left = 0.0;   // radians
  double phase_right = 0.0;  // radians
  KickStyle style = KickStyle::Dolphin;
};

struct LegState {
  double t = 0.0;        // seconds
  double a_left = 0.0;   // meters
  double a_right = 0.0;  // meters
};

inline constexpr double kDefaultAmplitudeM = 0.02;

/// Sinusoidal kick law for both legs:
///   a_left  = A sin(2 pi f t + phase_left)
///   a_right = A sin(2 pi f t + phase_right)
/// Throws Error(InvalidArgument) for non-finite inputs, A <= 0 or t < 0.
LegState leg_deflection(const KickPattern& pattern, double amplitude_m, double t);

/// The six kick patterns: s1/s3/s5 dolphin and s2/s4/s6 flutter at 1, 1.5
/// and 2 Hz. Phases are canonical (left = 0, right in {0, pi}).
const std::array<KickPattern, kPatternCount>& pattern_set();

const KickPattern& pattern_for(PatternId id);

int pattern_index(PatternId id) noexcept;
PatternId pattern_from_index(int index);

std::string pattern_name(PatternId id);  // "s1".."s6"
PatternId parse_pattern_name(std::string_view name);

const char* style_name(KickStyle style) noexcept;

/// Checks the style/phase invariant and f > 0.
bool is_consistent(const KickPattern& pattern) noexcept;

// Pattern config file: header "id,frequency_hz,phase_left,phase_right"
// followed by one row per pattern.
void write_pattern_config(std::ostream& out,
                          const std::array<KickPattern, kPatternCount>& patterns);
std::vector<KickPattern> read_pattern_config(std::istream& in);

}  // namespace kicksense
