#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>

#include "trislit/core.hpp"
#include "trislit/units.hpp"

namespace trislit::classical {

/// Nonlinear medium and scan geometry.  Defaults reproduce the LBO
/// configuration used throughout: 1 mm crystal, n = 1.611,
/// d_eff = 0.749 pm/V, eta = (0.15, 0.15, 0.05), interaction width
/// 0.05 cm, mutual-overlap factor 0.3, intersection angle 6.2 deg,
/// focus at Z = 0.35 cm.
struct CrystalModel {
  double length_m = 1e-3;
  double refractive_index = 1.611;
  double d_eff_m_per_v = 0.749e-12;
  double delta_k_per_m = 0.0;
  std::array<double, 3> eta = {0.15, 0.15, 0.05};
  double interaction_width_m = 5.0e-4;
  double three_beam_factor = 0.3;
  double theta_rad = deg_to_rad(6.2);
  double focus_z_m = 0.35e-2;

  void validate() const {
    if (!(length_m > 0)) throw std::invalid_argument("crystal length must be > 0");
    if (!(refractive_index > 1)) throw std::invalid_argument("refractive index must be > 1");
    if (!(d_eff_m_per_v >= 0)) throw std::invalid_argument("d_eff must be >= 0");
    if (!(interaction_width_m > 0)) throw std::invalid_argument("interaction width must be > 0");
    if (!(three_beam_factor > 0 && three_beam_factor <= 1))
      throw std::invalid_argument("three-beam factor must be in (0, 1]");
    if (!(theta_rad >= 0 && theta_rad < std::numbers::pi / 2))
      throw std::invalid_argument("intersection angle must be in [0, pi/2)");
    for (double e : eta)
      if (!(e >= 0)) throw std::invalid_argument("eta factors must be >= 0");
  }
};

struct CouplingTriple {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

struct PhaseTriple {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;

  /// The one combination the three-beam interaction is sensitive to.
  double relative() const { return phi1 + phi2 - phi3; }
};

/// Prefactor of the power-to-field conversion for Gaussian pulses,
/// E = sqrt(prefactor * P).
inline double field_power_prefactor(double pulse_fwhm_s, double rep_rate_hz, double waist_m) {
  if (!(pulse_fwhm_s > 0) || !(rep_rate_hz > 0) || !(waist_m > 0))
    throw std::invalid_argument("pulse parameters must be > 0");
  const double ln2_pi = std::log(2.0) / std::numbers::pi;
  return std::pow(ln2_pi, 1.5) * 16.0 /
         (rep_rate_hz * pulse_fwhm_s * waist_m * waist_m * constants::vacuum_permittivity *
          constants::speed_of_light);
}

inline double field_power_prefactor(const BeamParams& b) {
  return field_power_prefactor(b.pulse_fwhm_s, b.rep_rate_hz, b.waist_m);
}

/// Peak field amplitude (V/m) of a pulsed Gaussian beam with the given
/// average power.
inline double field_from_power(const BeamParams& b) {
  return std::sqrt(field_power_prefactor(b) * b.avg_power_w);
}

/// g = 2 d_eff w1 / c.
inline double base_coupling(const CrystalModel& crystal, double omega1) {
  if (!(omega1 > 0)) throw std::invalid_argument("omega1 must be > 0");
  return 2.0 * crystal.d_eff_m_per_v * omega1 / constants::speed_of_light;
}

/// Gaussian crystal-position dependence of the per-process couplings,
/// g_i(Z) = eta_i * g * exp(-2 (Z - focus)^2 / width^2).  With all three
/// beams open every eta is additionally scaled by the mutual-overlap factor.
inline CouplingTriple coupling_profile(double z_m, const CrystalModel& crystal,
                                       bool three_beams_open, double omega1) {
  const double g = base_coupling(crystal, omega1);
  const double dz = z_m - crystal.focus_z_m;
  const double w = crystal.interaction_width_m;
  double envelope = std::exp(-2.0 * dz * dz / (w * w));
  if (three_beams_open) envelope *= crystal.three_beam_factor;
  return CouplingTriple{crystal.eta[0] * g * envelope, crystal.eta[1] * g * envelope,
                        crystal.eta[2] * g * envelope};
}

/// Optical phase picked up by each beam as the crystal is translated to Z.
/// The pump advances as 2 pi n Z / lambda3; the tilted omega beams as
/// 2 pi n Z / (lambda cos theta).  Z = 0 is the zero-phase reference.
inline PhaseTriple phase_profile(double z_m, const CrystalModel& crystal,
                                 const std::array<double, 3>& wavelengths_m) {
  const double n = crystal.refractive_index;
  const double ct = std::cos(crystal.theta_rad);
  return PhaseTriple{constants::two_pi * n * z_m / (wavelengths_m[0] * ct),
                     constants::two_pi * n * z_m / (wavelengths_m[1] * ct),
                     constants::two_pi * n * z_m / wavelengths_m[2]};
}

/// Z spacing over which the relative phase advances by 2 pi (degenerate
/// omega beams assumed).
inline double fringe_period(const CrystalModel& crystal, double lambda3_m) {
  const double f = 1.0 / std::cos(crystal.theta_rad) - 1.0;
  if (!(f > 0)) throw std::invalid_argument("fringe period undefined at theta = 0");
  return lambda3_m / (crystal.refractive_index * f);
}

using StepObserver = std::function<void(int step, double z_m, const TriField&)>;

/// Fixed-step 4th-order Runge-Kutta integration of
///   dE1/dz = i g1 E3 E2* e^{-i dk z}
///   dE2/dz = i g2 E3 E1* e^{-i dk z}
///   dE3/dz = i 2 g3 E1 E2 e^{-i dk z}
/// from z = 0 to z = length.  The observer, when set, sees the state after
/// every accepted step (and the initial state as step 0).
inline TriField solve_coupled_waves(const TriField& initial, const CouplingTriple& c,
                                    double delta_k_per_m, double length_m, int steps,
                                    const StepObserver& observer = nullptr) {
  if (steps < 1) throw std::invalid_argument("solver needs at least one step");
  if (!(length_m > 0)) throw std::invalid_argument("crystal length must be > 0");
  if (!initial.finite()) throw std::invalid_argument("non-finite initial field");

  const Complex i2g3{0.0, 2.0 * c.g3};
  const Complex ig1{0.0, c.g1};
  const Complex ig2{0.0, c.g2};
  auto rhs = [&](double z, const TriField& f) {
    const Complex mismatch = std::polar(1.0, -delta_k_per_m * z);
    return TriField{ig1 * f.e3 * std::conj(f.e2) * mismatch,
                    ig2 * f.e3 * std::conj(f.e1) * mismatch, i2g3 * f.e1 * f.e2 * mismatch};
  };

  const double h = length_m / steps;
  TriField f = initial;
  if (observer) observer(0, 0.0, f);
  for (int s = 0; s < steps; ++s) {
    const double z = s * h;
    const TriField k1 = rhs(z, f);
    const TriField f2{f.e1 + 0.5 * h * k1.e1, f.e2 + 0.5 * h * k1.e2, f.e3 + 0.5 * h * k1.e3};
    const TriField k2 = rhs(z + 0.5 * h, f2);
    const TriField f3{f.e1 + 0.5 * h * k2.e1, f.e2 + 0.5 * h * k2.e2, f.e3 + 0.5 * h * k2.e3};
    const TriField k3 = rhs(z + 0.5 * h, f3);
    const TriField f4{f.e1 + h * k3.e1, f.e2 + h * k3.e2, f.e3 + h * k3.e3};
    const TriField k4 = rhs(z + h, f4);
    f.e1 += h / 6.0 * (k1.e1 + 2.0 * k2.e1 + 2.0 * k3.e1 + k4.e1);
    f.e2 += h / 6.0 * (k1.e2 + 2.0 * k2.e2 + 2.0 * k3.e2 + k4.e2);
    f.e3 += h / 6.0 * (k1.e3 + 2.0 * k2.e3 + 2.0 * k3.e3 + k4.e3);
    if (!f.finite())
      throw NumericalError("coupled-wave solver produced a non-finite field at step " +
                           std::to_string(s + 1) + " of " + std::to_string(steps));
    if (observer) observer(s + 1, (s + 1) * h, f);
  }
  return f;
}

inline constexpr int default_solver_steps = 2000;

namespace detail {

/// Mode-3 output power (W) with an explicit choice of the coupling envelope
/// (two-beam vs three-beam overlap).  Used by the conversion decomposition,
/// which needs the SFG response at three-beam couplings.
inline double output_power_with_overlap(const SlitMask& mask, const BeamTriple& beams,
                                        const CrystalModel& crystal, double z_m,
                                        bool three_beam_overlap,
                                        int steps = default_solver_steps) {
  crystal.validate();
  const PhaseTriple phases =
      phase_profile(z_m, crystal,
                    {beams[0].wavelength_m, beams[1].wavelength_m, beams[2].wavelength_m});
  // unit phasors are multiplied, not their angles summed: adding a small
  // input phase to a ~1e5 rad scan phase would truncate it to the ulp
  const TriField full{field_from_power(beams[0]) * std::polar(1.0, beams[0].phase_rad) *
                          std::polar(1.0, phases.phi1),
                      field_from_power(beams[1]) * std::polar(1.0, beams[1].phase_rad) *
                          std::polar(1.0, phases.phi2),
                      field_from_power(beams[2]) * std::polar(1.0, beams[2].phase_rad) *
                          std::polar(1.0, phases.phi3)};
  const TriField in = mask_fields(mask, full);
  const CouplingTriple c =
      coupling_profile(z_m, crystal, three_beam_overlap, angular_frequency(beams[0].wavelength_m));
  const TriField out =
      solve_coupled_waves(in, c, crystal.delta_k_per_m, crystal.length_m, steps);
  return std::norm(out.e3) / field_power_prefactor(beams[2]);
}

}  // namespace detail

/// Mode-3 output power (W) after the crystal for one shutter configuration.
inline double output_power(const SlitMask& mask, const BeamTriple& beams,
                           const CrystalModel& crystal, double z_m,
                           int steps = default_solver_steps) {
  return detail::output_power_with_overlap(mask, beams, crystal, z_m, mask.all_open(), steps);
}

/// Normalized detection probability for one shutter configuration: mode-3
/// output power divided by the total input power.
inline double classical_term(const SlitMask& mask, const BeamTriple& beams,
                             const CrystalModel& crystal, double z_m,
                             int steps = default_solver_steps) {
  const double total = total_input_power(beams);
  if (!(total > 0)) throw std::invalid_argument("total input power must be > 0");
  return output_power(mask, beams, crystal, z_m, steps) / total;
}

struct DecompositionResult {
  ConversionPowers powers;
  SorkinTerms terms;           // the Sorkin terms of the same configuration
  double kappa_terms = 0.0;      // alternating-sum route
  double kappa_conversion = 0.0;  // conversion-power route
  std::string warning;           // non-empty when the pair symmetry is violated
};

/// Decomposes the detected powers into gross SFG/DFG conversion shares and
/// reports kappa through both routes.  The two-beam shares come from the
/// pair configurations; the three-beam SFG share is evaluated at the reduced
/// mutual overlap and the three-beam DFG share closes the decomposition of
/// the all-open term, so the two kappa routes agree identically.
inline DecompositionResult conversion_decomposition(const BeamTriple& beams,
                                                    const CrystalModel& crystal, double z_m,
                                                    int steps = default_solver_steps,
                                                    double symmetry_rel_tol = 1e-6) {
  const double total = total_input_power(beams);
  if (!(total > 0)) throw std::invalid_argument("total input power must be > 0");
  const double p_pump = beams[2].avg_power_w;

  const double out3 = output_power(SlitMask{false, false, true}, beams, crystal, z_m, steps);
  const double out12 = output_power(SlitMask{true, true, false}, beams, crystal, z_m, steps);
  const double out13 = output_power(SlitMask{true, false, true}, beams, crystal, z_m, steps);
  const double out23 = output_power(SlitMask{false, true, true}, beams, crystal, z_m, steps);
  const double out123 = output_power(SlitMask{true, true, true}, beams, crystal, z_m, steps);
  const double sfg3 = detail::output_power_with_overlap(SlitMask{true, true, false}, beams,
                                                        crystal, z_m, true, steps);

  DecompositionResult r;
  r.powers.p_sfg2 = out12;
  r.powers.p_dfg2 = 0.5 * ((p_pump - out13) + (p_pump - out23));
  r.powers.p_sfg3 = sfg3;
  r.powers.p_dfg3 = 0.5 * (p_pump + sfg3 - out123);

  r.terms = SorkinTerms{0.0, 0.0,          0.0,          out3 / total,
                        out12 / total, out13 / total, out23 / total, out123 / total};
  r.kappa_terms = sorkin_kappa(r.terms);
  r.kappa_conversion = ((r.powers.p_sfg3 - r.powers.p_sfg2) -
                        2.0 * (r.powers.p_dfg3 - r.powers.p_dfg2)) /
                       total;

  const double asym = std::abs(out13 - out23);
  if (asym > symmetry_rel_tol * std::max({out13, out23, 1e-300}))
    r.warning = "pair symmetry violated: |P13 - P23| = " + std::to_string(asym / total) +
                " (normalized); the DFG share uses their mean";
  return r;
}

}  // namespace trislit::classical
