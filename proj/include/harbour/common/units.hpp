#pragma once

#include <cmath>
#include <numbers>

namespace harbour {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kKnot = 1852.0 / 3600.0;  // m/s

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }
constexpr double knots_to_ms(double kn) { return kn * kKnot; }
constexpr double ms_to_knots(double ms) { return ms / kKnot; }
constexpr double rpm_to_rps(double rpm) { return rpm / 60.0; }
constexpr double rps_to_rpm(double rps) { return rps * 60.0; }

/// Wraps an angle to (-pi, pi]. Odd-symmetric away from the +-pi seam, which
/// the mirror-symmetry property of the integrator relies on.
inline double wrap_pi(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Wraps an angle to [0, 2pi).
inline double wrap_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

}  // namespace harbour
