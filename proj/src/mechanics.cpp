#include "optolev/mechanics.hpp"

#include <cmath>

namespace optolev::mech {

namespace {

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw invalid_parameter(std::string(what) + " must be positive and finite");
  }
}

double effective_omega_sq(const TorsionalPendulum& p, double k_ext) {
  if (!std::isfinite(k_ext)) {
    throw invalid_parameter("external spring constant must be finite");
  }
  const double omega0 = p.omega0_rad_s();
  return omega0 * omega0 + k_ext / p.reduced_mass_kg();
}

}  // namespace

void TorsionalPendulum::validate() const {
  require_finite_positive(inertia_kg_m2, "moment of inertia");
  require_finite_positive(lever_arm_m, "lever arm");
  require_finite_positive(natural_frequency_hz, "natural frequency");
  require_finite_positive(quality_factor, "quality factor");
  if (!std::isfinite(mass_kg) || mass_kg < 0.0) {
    throw invalid_parameter("pendulum mass must be non-negative");
  }
}

std::complex<double> pendulum_tf(const TorsionalPendulum& pendulum,
                                 double omega_rad_s) {
  pendulum.validate();
  if (!std::isfinite(omega_rad_s) || omega_rad_s < 0.0) {
    throw invalid_parameter("angular frequency must be non-negative");
  }
  const double omega0 = pendulum.omega0_rad_s();
  const std::complex<double> denom(
      omega0 * omega0 - omega_rad_s * omega_rad_s,
      omega_rad_s * omega0 / pendulum.quality_factor);
  return (1.0 / pendulum.reduced_mass_kg()) / denom;
}

std::complex<double> effective_tf(const TorsionalPendulum& pendulum,
                                  double k_ext_n_per_m, double omega_rad_s) {
  pendulum.validate();
  if (!std::isfinite(omega_rad_s) || omega_rad_s < 0.0) {
    throw invalid_parameter("angular frequency must be non-negative");
  }
  const double w_eff_sq = effective_omega_sq(pendulum, k_ext_n_per_m);
  if (w_eff_sq <= 0.0) {
    throw anti_spring_error(
        "external anti-spring cancels the pendulum restoring force");
  }
  const double w_eff = std::sqrt(w_eff_sq);
  const std::complex<double> denom(
      w_eff_sq - omega_rad_s * omega_rad_s,
      omega_rad_s * w_eff / pendulum.quality_factor);
  return (1.0 / pendulum.reduced_mass_kg()) / denom;
}

double spring_from_shift(double inertia_kg_m2, double lever_arm_m,
                         double f0_hz, double f_eff_hz) {
  require_finite_positive(inertia_kg_m2, "moment of inertia");
  require_finite_positive(lever_arm_m, "lever arm");
  require_finite_positive(f0_hz, "natural frequency");
  if (!std::isfinite(f_eff_hz) || f_eff_hz < 0.0) {
    throw invalid_parameter("effective frequency must be non-negative");
  }
  const double scale =
      kTwoPi * kTwoPi * inertia_kg_m2 / (lever_arm_m * lever_arm_m);
  return scale * (f_eff_hz * f_eff_hz - f0_hz * f0_hz);
}

double effective_frequency(const TorsionalPendulum& pendulum,
                           double k_ext_n_per_m) {
  pendulum.validate();
  const double w_eff_sq = effective_omega_sq(pendulum, k_ext_n_per_m);
  if (w_eff_sq <= 0.0) {
    throw anti_spring_error(
        "external anti-spring cancels the pendulum restoring force");
  }
  return std::sqrt(w_eff_sq) / kTwoPi;
}

double critical_spring(const TorsionalPendulum& pendulum) {
  pendulum.validate();
  const double omega0 = pendulum.omega0_rad_s();
  return omega0 * omega0 * pendulum.reduced_mass_kg();
}

SpringEstimate spring_uncertainty(double inertia_kg_m2, double lever_arm_m,
                                  const Uncertain& f0_hz,
                                  const Uncertain& f_eff_hz) {
  if (f0_hz.sigma < 0.0 || f_eff_hz.sigma < 0.0) {
    throw invalid_parameter("frequency uncertainties must be non-negative");
  }
  SpringEstimate estimate;
  estimate.k_n_per_m = spring_from_shift(inertia_kg_m2, lever_arm_m,
                                         f0_hz.value, f_eff_hz.value);
  const double scale =
      kTwoPi * kTwoPi * inertia_kg_m2 / (lever_arm_m * lever_arm_m);
  const double d_eff = 2.0 * f_eff_hz.value * f_eff_hz.sigma;
  const double d_0 = 2.0 * f0_hz.value * f0_hz.sigma;
  estimate.sigma_n_per_m = scale * std::hypot(d_eff, d_0);
  return estimate;
}

}  // namespace optolev::mech
