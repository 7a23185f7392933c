#include "optolev/optics.hpp"

#include <cmath>

namespace optolev::optics {

namespace {

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw invalid_parameter(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

void Mirror::validate() const {
  require_finite_positive(radius_of_curvature_m, "mirror radius of curvature");
  if (!std::isfinite(power_transmissivity) || power_transmissivity < 0.0 ||
      power_transmissivity > 1.0) {
    throw invalid_parameter("mirror transmissivity must lie in [0, 1]");
  }
}

void Cavity::validate() const {
  require_finite_positive(length_m, "cavity length");
  require_finite_positive(finesse, "cavity finesse");
  require_finite_positive(levitated_mirror_curvature_m,
                          "levitated mirror curvature");
  if (!std::isfinite(intracavity_power_w) || intracavity_power_w < 0.0) {
    throw invalid_parameter("intracavity power must be non-negative");
  }
  fixed_mirror.validate();
}

double g_factor(double length_m, double r_fixed_m, double r_lev_m) {
  require_finite_positive(length_m, "cavity length");
  require_finite_positive(r_fixed_m, "fixed mirror curvature");
  require_finite_positive(r_lev_m, "levitated mirror curvature");
  return (1.0 - length_m / r_fixed_m) * (1.0 - length_m / r_lev_m);
}

double g_factor(const Cavity& cavity) {
  cavity.validate();
  return g_factor(cavity.length_m, cavity.fixed_mirror.radius_of_curvature_m,
                  cavity.levitated_mirror_curvature_m);
}

double center_distance(double length_m, double r_fixed_m, double r_lev_m) {
  require_finite_positive(length_m, "cavity length");
  require_finite_positive(r_fixed_m, "fixed mirror curvature");
  require_finite_positive(r_lev_m, "levitated mirror curvature");
  return std::abs(length_m - r_fixed_m - r_lev_m);
}

CavityBranch cavity_branch(double length_m, double r_fixed_m, double r_lev_m) {
  const double sum = r_fixed_m + r_lev_m;
  if (length_m == sum) return CavityBranch::Concentric;
  return length_m < sum ? CavityBranch::Short : CavityBranch::Far;
}

double damping_delay_s(const Cavity& cavity) {
  cavity.validate();
  const double g = g_factor(cavity.length_m,
                            cavity.fixed_mirror.radius_of_curvature_m,
                            cavity.levitated_mirror_curvature_m);
  const double one_minus_g = 1.0 - g;
  if (one_minus_g == 0.0) {
    throw singular_geometry("cavity g-factor is exactly 1; delay diverges");
  }
  return kPi * cavity.length_m /
         (cavity.finesse * kSpeedOfLight * one_minus_g);
}

std::complex<double> horizontal_spring(const Cavity& cavity,
                                       double omega_rad_s) {
  cavity.validate();
  if (!std::isfinite(omega_rad_s)) {
    throw invalid_parameter("angular frequency must be finite");
  }
  const double a =
      center_distance(cavity.length_m, cavity.fixed_mirror.radius_of_curvature_m,
                      cavity.levitated_mirror_curvature_m);
  if (a == 0.0) {
    throw degenerate_concentric(
        "mirror centers of curvature coincide; horizontal spring diverges");
  }
  const double tau = damping_delay_s(cavity);
  const double sign = cavity.orientation == Orientation::Upper ? 1.0 : -1.0;
  const double static_spring =
      sign * (2.0 * cavity.intracavity_power_w / kSpeedOfLight) / a;
  return {static_spring, -static_spring * omega_rad_s * tau};
}

double rotational_spring(double mass_kg, double gravity_m_s2,
                         double curvature_m) {
  if (!std::isfinite(mass_kg) || mass_kg < 0.0) {
    throw invalid_parameter("mirror mass must be non-negative");
  }
  require_finite_positive(gravity_m_s2, "gravitational acceleration");
  require_finite_positive(curvature_m, "mirror curvature");
  return mass_kg * gravity_m_s2 * curvature_m;
}

void SandwichConfig::validate() const {
  upper.validate();
  lower.validate();
  if (upper.orientation != Orientation::Upper) {
    throw invalid_parameter("sandwich upper cavity must have Upper orientation");
  }
  if (lower.orientation != Orientation::Lower) {
    throw invalid_parameter("sandwich lower cavity must have Lower orientation");
  }
  require_finite_positive(mirror_mass_kg, "mirror mass");
  require_finite_positive(mirror_curvature_m, "mirror curvature");
  require_finite_positive(gravity_m_s2, "gravitational acceleration");
  if (!std::isfinite(k_opt_upper_n_per_m) || !std::isfinite(k_opt_lower_n_per_m)) {
    throw invalid_parameter("vertical optical spring constants must be finite");
  }
}

StabilityMatrix stability_matrix(const SandwichConfig& config) {
  config.validate();
  StabilityMatrix m;
  m.k_x_n_per_m = horizontal_spring(config.upper, 0.0).real() +
                  horizontal_spring(config.lower, 0.0).real();
  m.k_z_n_per_m = config.k_opt_upper_n_per_m + config.k_opt_lower_n_per_m;
  m.k_beta_nm_per_rad = rotational_spring(
      config.mirror_mass_kg, config.gravity_m_s2, config.mirror_curvature_m);
  return m;
}

StabilityReport is_stable(const StabilityMatrix& matrix) {
  StabilityReport report;
  report.margins = matrix;
  report.axis_ok = {matrix.k_x_n_per_m > 0.0, matrix.k_z_n_per_m > 0.0,
                    matrix.k_beta_nm_per_rad > 0.0};
  report.stable = report.axis_ok[0] && report.axis_ok[1] && report.axis_ok[2];
  return report;
}

std::string StabilityReport::failing_axes() const {
  static constexpr const char* names[3] = {"x", "z", "beta"};
  std::string out;
  for (int i = 0; i < 3; ++i) {
    if (axis_ok[static_cast<std::size_t>(i)]) continue;
    if (!out.empty()) out += ",";
    out += names[i];
  }
  return out;
}

Interval predicted_spring_band(const Uncertain& center_distance_m,
                               const Uncertain& power_w) {
  if (center_distance_m.sigma < 0.0 || power_w.sigma < 0.0) {
    throw invalid_parameter("uncertainties must be non-negative");
  }
  if (power_w.value < 0.0) {
    throw invalid_parameter("intracavity power must be non-negative");
  }
  const double a_lo = center_distance_m.value - center_distance_m.sigma;
  const double a_hi = center_distance_m.value + center_distance_m.sigma;
  if (a_lo <= 0.0) {
    throw invalid_parameter(
        "center distance uncertainty reaches zero separation");
  }
  // k = 2P/(a c) is monotone in both arguments, so the extremes of the band
  // sit at the corner combinations.
  Interval band;
  band.lo = std::max(0.0, 2.0 * (power_w.value - power_w.sigma) /
                              (kSpeedOfLight * a_hi));
  band.hi = 2.0 * (power_w.value + power_w.sigma) / (kSpeedOfLight * a_lo);
  return band;
}

}  // namespace optolev::optics
