#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "optolev/common.hpp"
#include "optolev/lti.hpp"
#include "optolev/mechanics.hpp"
#include "optolev/response.hpp"

namespace optolev::loop {

// Second-order plant realized by the time-domain integrator. Constructed from
// a torsional pendulum, optionally with an optical spring folded into the
// state matrix as added stiffness; the realized response then matches the
// shifted analytic transfer function at every frequency.
struct PendulumBlock {
  double inv_reduced_mass = 0.0;  // L^2/I, (m/s^2)/N
  double omega_spring_rad_s = 0.0;
  double damping_rate_rad_s = 0.0;

  static PendulumBlock from_pendulum(const mech::TorsionalPendulum& pendulum,
                                     double k_ext_n_per_m = 0.0);
  std::complex<double> tf(double omega_rad_s) const;  // displacement per force
  void validate() const;
};

// Phase-lead servo filter: one zero at 47.6 mHz, poles at 3.39 Hz and 4.82 Hz.
LtiBlock make_filter(double gain);
std::complex<double> filter_tf(double gain, double omega_rad_s);

// Control topology: sensor S [V/m] reads displacement, the summing junction
// forms e = r - sign * S x, the filter and actuator A [N/V] close the loop by
// pushing on the plant. sign = +1 is negative feedback.
struct LoopConfig {
  PendulumBlock plant;
  double sensor_gain_v_per_m = 0.0;
  LtiBlock filter;
  double actuator_gain_n_per_v = 0.0;
  double feedback_sign = 1.0;
  bool control_on = true;

  void validate() const;
  double max_corner_hz() const;
};

// Open-loop transfer function H * S * F * A.
std::complex<double> open_loop(const LoopConfig& loop, double omega_rad_s);

// Closed-loop disturbance suppression 1/(1 + sign * G).
std::complex<double> closed_loop_suppression(const LoopConfig& loop,
                                             double omega_rad_s);

// 1/(100 * highest corner frequency in the loop).
double default_dt_s(const LoopConfig& loop);

struct DriveSpec {
  double injection_amp_v = 0.0;   // reference added at the summing junction
  double injection_freq_hz = 0.0;
  double force_amp_n = 0.0;       // external sinusoidal force on the plant
  double force_freq_hz = 0.0;
  double initial_x_m = 0.0;
  double initial_v_m_s = 0.0;
};

struct NoiseSpec {
  double force_asd_n_rthz = 0.0;  // white force noise, one-sided ASD
  double seismic_amp_n = 0.0;     // sinusoidal force line
  double seismic_freq_hz = 0.0;
  std::uint64_t seed = 0;
};

// Synchronized records of the loop signals: s_a is the sensor output arriving
// back at the junction, s_b the junction output heading into the filter.
struct TimeSeries {
  double sample_rate_hz = 0.0;
  double t0_s = 0.0;
  std::vector<double> s_a_v;
  std::vector<double> s_b_v;
  std::vector<double> x_m;

  std::size_t size() const { return x_m.size(); }
  TimeSeries tail(std::size_t samples) const;
};

// Columns: t_s,s_a_V,s_b_V,x_m with 17 significant digits.
void write_timeseries_csv(const TimeSeries& ts,
                          const std::filesystem::path& path);

// Fixed-step classical Runge-Kutta integration of plant + filter states.
// White force noise is held constant across the stages of each step.
TimeSeries integrate_dynamics(const LoopConfig& loop, const DriveSpec& drive,
                              const NoiseSpec& noise, double duration_s,
                              double dt_s);

struct OltfEstimate {
  std::complex<double> value;
  double snr = 0.0;
  bool confident = false;
};

// Single-bin discrete Fourier ratio s_a/s_b at the injection frequency over a
// rectangular window holding an integer number (>= 5) of injection cycles.
OltfEstimate estimate_oltf(const TimeSeries& ts, double f_inj_hz);

struct SweepSettings {
  double dt_max_s = 0.0;  // 0 selects default_dt_s(loop)
  int settle_cycles = 6;
  int measure_cycles = 8;
  double injection_amp_v = 0.05;
  NoiseSpec noise;  // noise.seed is the base seed; runs derive their own
  int jobs = 1;
};

// One simulated open-loop transfer function measurement per entry of
// freqs_hz; repeated entries give independent repeats. Runs are independent
// and are distributed over settings.jobs threads deterministically.
est::FrequencyResponse measure_sweep(const LoopConfig& loop,
                                     std::span<const double> freqs_hz,
                                     const SweepSettings& settings);

// Divides the sensor, actuator and filter response out of a measured
// open-loop transfer function, leaving the plant response in m/N.
est::FrequencyResponse to_plant_response(const est::FrequencyResponse& oltf,
                                         const LoopConfig& loop);

}  // namespace optolev::loop
