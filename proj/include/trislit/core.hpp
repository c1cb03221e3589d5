#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "trislit/units.hpp"

namespace trislit {

using Complex = std::complex<double>;

/// Optical description of one input beam.  Powers are stored in watts; the
/// config layer accepts milliwatts.  The phase is reduced to [0, 2*pi) on
/// construction.
struct BeamParams {
  double wavelength_m;
  double avg_power_w;
  double pulse_fwhm_s;
  double rep_rate_hz;
  double waist_m;
  double phase_rad;

  BeamParams(double wavelength, double power, double fwhm, double rep, double waist,
             double phase = 0.0)
      : wavelength_m(wavelength),
        avg_power_w(power),
        pulse_fwhm_s(fwhm),
        rep_rate_hz(rep),
        waist_m(waist),
        phase_rad(reduce_phase(phase)) {
    if (!(wavelength_m > 0)) throw std::invalid_argument("beam wavelength must be > 0");
    if (!(avg_power_w >= 0)) throw std::invalid_argument("beam power must be >= 0");
    if (!(pulse_fwhm_s > 0)) throw std::invalid_argument("pulse FWHM must be > 0");
    if (!(rep_rate_hz > 0)) throw std::invalid_argument("repetition rate must be > 0");
    if (!(waist_m > 0)) throw std::invalid_argument("beam waist must be > 0");
  }

  BeamParams with_power(double power_w) const {
    BeamParams b = *this;
    if (!(power_w >= 0)) throw std::invalid_argument("beam power must be >= 0");
    b.avg_power_w = power_w;
    return b;
  }

  BeamParams with_phase(double phase) const {
    BeamParams b = *this;
    b.phase_rad = reduce_phase(phase);
    return b;
  }
};

using BeamTriple = std::array<BeamParams, 3>;

/// Complex field amplitudes (V/m) of signal (mode 1), idler (mode 2) and
/// pump (mode 3).
struct TriField {
  Complex e1{0.0, 0.0};
  Complex e2{0.0, 0.0};
  Complex e3{0.0, 0.0};

  bool finite() const {
    auto ok = [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
    return ok(e1) && ok(e2) && ok(e3);
  }
};

/// One of the eight shutter configurations.  The canonical ordering is
/// (none),(1),(2),(3),(12),(13),(23),(123).
struct SlitMask {
  bool open1 = false;
  bool open2 = false;
  bool open3 = false;

  constexpr bool all_open() const { return open1 && open2 && open3; }
  constexpr int open_count() const { return int(open1) + int(open2) + int(open3); }

  std::string label() const {
    std::string s;
    if (open1) s += '1';
    if (open2) s += '2';
    if (open3) s += '3';
    return s.empty() ? "none" : s;
  }

  friend constexpr bool operator==(const SlitMask&, const SlitMask&) = default;
};

inline constexpr std::array<SlitMask, 8> all_masks() {
  return {SlitMask{false, false, false}, SlitMask{true, false, false},
          SlitMask{false, true, false}, SlitMask{false, false, true},
          SlitMask{true, true, false},  SlitMask{true, false, true},
          SlitMask{false, true, true},  SlitMask{true, true, true}};
}

inline TriField mask_fields(const SlitMask& mask, const TriField& full) {
  return TriField{mask.open1 ? full.e1 : Complex{0.0, 0.0},
                  mask.open2 ? full.e2 : Complex{0.0, 0.0},
                  mask.open3 ? full.e3 : Complex{0.0, 0.0}};
}

/// The eight detection probabilities (mode-3 power normalized to the total
/// input power), in the canonical mask ordering.
struct SorkinTerms {
  double p0 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double p12 = 0.0;
  double p13 = 0.0;
  double p23 = 0.0;
  double p123 = 0.0;

  std::array<double, 8> as_array() const { return {p0, p1, p2, p3, p12, p13, p23, p123}; }

  static SorkinTerms from_array(const std::array<double, 8>& a) {
    return SorkinTerms{a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }

  bool finite() const {
    for (double v : as_array())
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool nonnegative() const {
    for (double v : as_array())
      if (v < 0.0) return false;
    return true;
  }

  static const std::array<std::string, 8>& labels() {
    static const std::array<std::string, 8> l = {"p0",  "p1",  "p2",  "p3",
                                                 "p12", "p13", "p23", "p123"};
    return l;
  }
};

/// The alternating sum of the eight configuration probabilities.  Vanishes
/// whenever the triple-beam response decomposes into pairwise terms.
inline double sorkin_kappa(const SorkinTerms& t) {
  if (!t.finite()) throw std::invalid_argument("sorkin_kappa: non-finite term");
  return t.p123 - t.p12 - t.p23 - t.p13 + t.p1 + t.p2 + t.p3 - t.p0;
}

inline double total_input_power(const BeamTriple& beams) {
  return beams[0].avg_power_w + beams[1].avg_power_w + beams[2].avg_power_w;
}

/// Gross conversion powers entering the conversion-based route to kappa.
/// The primed members refer to the all-beams-open configuration.
struct ConversionPowers {
  double p_sfg2 = 0.0;   // SFG power, signal+idler only
  double p_dfg2 = 0.0;   // pump deficit, pump+one omega beam
  double p_sfg3 = 0.0;   // SFG share with all three beams open
  double p_dfg3 = 0.0;   // per-channel DFG share with all three beams open
};

}  // namespace trislit
