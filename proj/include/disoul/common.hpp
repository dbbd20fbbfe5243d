// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace disoul {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wrap an angle into [0, 2*pi).
inline double wrap_two_pi(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod can land exactly on 2*pi after the add
  return a;
}

// Shortest angular distance between two bearings, in [0, pi].
inline double angular_distance(double a, double b) {
  double d = std::fabs(wrap_two_pi(a) - wrap_two_pi(b));
  return d > kPi ? kTwoPi - d : d;
}

// Rounds x to the nearest multiple of y (y > 0).
inline double round_to_multiple(double x, double y) {
  return std::round(x / y) * y;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }

}  // namespace disoul
