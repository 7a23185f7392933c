#pragma once

#include <array>
#include <complex>
#include <string>

#include "optolev/common.hpp"

namespace optolev::optics {

enum class Orientation { Upper, Lower };

// Position of the cavity length relative to the sum of the mirror curvature
// radii. The sandwich operates on the short branch (l < R1 + R2).
enum class CavityBranch { Short, Concentric, Far };

struct Mirror {
  double radius_of_curvature_m = 0.0;
  double power_transmissivity = 0.0;  // fraction of incident power
  void validate() const;
};

// One vertical Fabry-Perot cavity of the sandwich: a fixed concave mirror and
// the levitated mirror, pushed apart (Upper) or together (Lower) by radiation
// pressure.
struct Cavity {
  double length_m = 0.0;
  double finesse = 0.0;
  double intracavity_power_w = 0.0;
  Mirror fixed_mirror;
  double levitated_mirror_curvature_m = 0.0;
  Orientation orientation = Orientation::Upper;
  void validate() const;
};

// Product (1 - l/R_fixed)(1 - l/R_lev) controlling transversal mode geometry.
double g_factor(double length_m, double r_fixed_m, double r_lev_m);
double g_factor(const Cavity& cavity);

// Distance |l - R_fixed - R_lev| between the mirror centers of curvature.
double center_distance(double length_m, double r_fixed_m, double r_lev_m);
CavityBranch cavity_branch(double length_m, double r_fixed_m, double r_lev_m);

// Complex horizontal optical spring constant at angular frequency omega.
// The real part is the static spring, the imaginary part the finite
// photon-storage-time delay contribution. Upper cavities restore (positive),
// lower cavities anti-restore (negative).
std::complex<double> horizontal_spring(const Cavity& cavity, double omega_rad_s);

// Delay constant pi*l/(F*c*(1-G)) in seconds; |Im K / Re K| = omega * this.
double damping_delay_s(const Cavity& cavity);

// Gravitational pendulum stiffness m*g*R of the rotational degree of freedom.
double rotational_spring(double mass_kg, double gravity_m_s2, double curvature_m);

// Full sandwich: both cavities plus the levitated mirror's mass, curvature and
// the externally supplied vertical optical spring constants.
struct SandwichConfig {
  Cavity upper;
  Cavity lower;
  double mirror_mass_kg = 0.0;
  double mirror_curvature_m = 0.0;
  double gravity_m_s2 = kStandardGravity;
  double k_opt_upper_n_per_m = 0.0;
  double k_opt_lower_n_per_m = 0.0;
  void validate() const;
};

// Diagonal of the quadratic-expansion stiffness matrix; off-diagonal terms
// vanish by symmetry.
struct StabilityMatrix {
  double k_x_n_per_m = 0.0;
  double k_z_n_per_m = 0.0;
  double k_beta_nm_per_rad = 0.0;
};

struct StabilityReport {
  bool stable = false;
  std::array<bool, 3> axis_ok{};  // x, z, beta
  StabilityMatrix margins;
  std::string failing_axes() const;
};

StabilityMatrix stability_matrix(const SandwichConfig& config);

// Strict positivity of every diagonal entry; marginal (zero) counts as
// unstable.
StabilityReport is_stable(const StabilityMatrix& matrix);

// Static spring interval implied by uncertain center distance and intracavity
// power, evaluated at the monotone extremes of k = 2P/(a c). Negative lower
// bounds are clipped to zero.
Interval predicted_spring_band(const Uncertain& center_distance_m,
                               const Uncertain& power_w);

}  // namespace optolev::optics
