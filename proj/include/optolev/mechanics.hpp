#pragma once

#include <complex>

#include "optolev/common.hpp"

namespace optolev::mech {

// Torsion-bar force sensor holding the levitated mirror's twin at one end of
// a suspended bar. An external horizontal spring acting at the lever arm
// shifts the torsional resonance upward.
struct TorsionalPendulum {
  double inertia_kg_m2 = 0.0;
  double lever_arm_m = 0.0;          // distance from the wire to the probe spot
  double natural_frequency_hz = 0.0;
  double quality_factor = 0.0;
  double mass_kg = 0.0;              // informational only
  void validate() const;
  double omega0_rad_s() const { return kTwoPi * natural_frequency_hz; }
  // Reduced mass I/L^2 seen by a force applied at the lever arm.
  double reduced_mass_kg() const {
    return inertia_kg_m2 / (lever_arm_m * lever_arm_m);
  }
};

struct SpringEstimate {
  double k_n_per_m = 0.0;
  double sigma_n_per_m = 0.0;
};

// Displacement response x/F at the lever arm:
// (L^2/I) / (-omega^2 + omega0^2 + i omega omega0 / Q).
std::complex<double> pendulum_tf(const TorsionalPendulum& pendulum,
                                 double omega_rad_s);

// Same response with the resonance shifted by an external spring k_ext; the
// substitution omega0 -> omega_eff applies to the restoring and damping terms
// alike.
std::complex<double> effective_tf(const TorsionalPendulum& pendulum,
                                  double k_ext_n_per_m, double omega_rad_s);

// Spring constant implied by a measured frequency shift:
// k = (2 pi)^2 (I / L^2) (f_eff^2 - f0^2).
double spring_from_shift(double inertia_kg_m2, double lever_arm_m,
                         double f0_hz, double f_eff_hz);

// Inverse of spring_from_shift: shifted resonance frequency for a given k.
double effective_frequency(const TorsionalPendulum& pendulum,
                           double k_ext_n_per_m);

// Magnitude of the anti-spring that would cancel the restoring force:
// (2 pi f0)^2 I / L^2.
double critical_spring(const TorsionalPendulum& pendulum);

// First-order propagation of the frequency uncertainties into k.
SpringEstimate spring_uncertainty(double inertia_kg_m2, double lever_arm_m,
                                  const Uncertain& f0_hz,
                                  const Uncertain& f_eff_hz);

}  // namespace optolev::mech
