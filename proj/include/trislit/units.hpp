#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trislit {

/// Exceptions mapped to CLI exit codes: ConfigError -> 2, NumericalError -> 3,
/// IoError -> 4.  Precondition violations in library calls throw
/// std::invalid_argument.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace constants {
inline constexpr double speed_of_light = 299792458.0;          // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double planck = 6.62607015e-34;               // J s
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Reduce an angle to [0, 2*pi).
inline double reduce_phase(double rad) {
  double r = std::fmod(rad, constants::two_pi);
  if (r < 0) r += constants::two_pi;
  // fmod of a tiny negative can land exactly on 2*pi after the correction
  if (r >= constants::two_pi) r = 0.0;
  return r;
}

inline double angular_frequency(double wavelength_m) {
  return constants::two_pi * constants::speed_of_light / wavelength_m;
}

inline double photon_energy(double wavelength_m) {
  return constants::planck * constants::speed_of_light / wavelength_m;
}

/// Photons per pulse for an average power at a given repetition rate.
inline double photons_per_pulse(double avg_power_w, double wavelength_m, double rep_rate_hz) {
  return avg_power_w / (rep_rate_hz * photon_energy(wavelength_m));
}

inline double mw_to_w(double mw) { return mw * 1e-3; }
inline double w_to_mw(double w) { return w * 1e3; }

}  // namespace trislit
