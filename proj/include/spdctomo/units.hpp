#pragma once

#include <cmath>
#include <numbers>

namespace spdctomo {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

// Angular frequency (rad/s) of vacuum wavelength given in nanometers, and back.
inline double angular_frequency_from_nm(double wavelength_nm) noexcept {
  return kTwoPi * kSpeedOfLight / (wavelength_nm * 1e-9);
}
inline double wavelength_nm_from_angular_frequency(double omega) noexcept {
  return kTwoPi * kSpeedOfLight / omega * 1e9;
}

// Reduces an angle to (-pi, pi].
inline double wrap_phase(double phi) noexcept {
  double r = std::remainder(phi, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

// sin(x)/x with the removable singularity filled in.
inline double sinc(double x) noexcept {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace spdctomo
