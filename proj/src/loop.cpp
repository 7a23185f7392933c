#include "optolev/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "optolev/csvio.hpp"

namespace optolev::loop {

namespace {

constexpr double kFilterZeroHz = 0.0476;
constexpr double kFilterPole1Hz = 3.39;
constexpr double kFilterPole2Hz = 4.82;

}  // namespace

PendulumBlock PendulumBlock::from_pendulum(
    const mech::TorsionalPendulum& pendulum, double k_ext_n_per_m) {
  pendulum.validate();
  const double omega_eff_hz = mech::effective_frequency(pendulum, k_ext_n_per_m);
  PendulumBlock block;
  block.inv_reduced_mass = 1.0 / pendulum.reduced_mass_kg();
  block.omega_spring_rad_s = kTwoPi * omega_eff_hz;
  block.damping_rate_rad_s = block.omega_spring_rad_s / pendulum.quality_factor;
  return block;
}

void PendulumBlock::validate() const {
  if (!(inv_reduced_mass > 0.0) || !std::isfinite(inv_reduced_mass) ||
      !(omega_spring_rad_s > 0.0) || !std::isfinite(omega_spring_rad_s) ||
      !(damping_rate_rad_s >= 0.0) || !std::isfinite(damping_rate_rad_s)) {
    throw invalid_parameter("pendulum block parameters out of range");
  }
}

std::complex<double> PendulumBlock::tf(double omega_rad_s) const {
  validate();
  const std::complex<double> denom(
      omega_spring_rad_s * omega_spring_rad_s - omega_rad_s * omega_rad_s,
      omega_rad_s * damping_rate_rad_s);
  return inv_reduced_mass / denom;
}

LtiBlock make_filter(double gain) {
  LtiBlock block;
  block.zero_corners_hz = {kFilterZeroHz};
  block.pole_corners_hz = {kFilterPole1Hz, kFilterPole2Hz};
  block.gain = gain;
  block.label = "F";
  block.validate();
  return block;
}

std::complex<double> filter_tf(double gain, double omega_rad_s) {
  return make_filter(gain).eval(omega_rad_s);
}

void LoopConfig::validate() const {
  plant.validate();
  filter.validate();
  if (!std::isfinite(sensor_gain_v_per_m) || sensor_gain_v_per_m == 0.0 ||
      !std::isfinite(actuator_gain_n_per_v) || actuator_gain_n_per_v == 0.0) {
    throw invalid_parameter("loop gains must be finite and nonzero");
  }
  if (feedback_sign != 1.0 && feedback_sign != -1.0) {
    throw invalid_parameter("feedback sign must be +1 or -1");
  }
}

double LoopConfig::max_corner_hz() const {
  return std::max(filter.max_corner_hz(), plant.omega_spring_rad_s / kTwoPi);
}

std::complex<double> open_loop(const LoopConfig& loop, double omega_rad_s) {
  loop.validate();
  return loop.plant.tf(omega_rad_s) * loop.sensor_gain_v_per_m *
         loop.filter.eval(omega_rad_s) * loop.actuator_gain_n_per_v;
}

std::complex<double> closed_loop_suppression(const LoopConfig& loop,
                                             double omega_rad_s) {
  const std::complex<double> denom =
      1.0 + loop.feedback_sign * open_loop(loop, omega_rad_s);
  if (std::abs(denom) < 1e-12) {
    throw loop_singularity("1 + G vanishes at this frequency");
  }
  return 1.0 / denom;
}

double default_dt_s(const LoopConfig& loop) {
  loop.validate();
  return 1.0 / (100.0 * loop.max_corner_hz());
}

TimeSeries TimeSeries::tail(std::size_t samples) const {
  if (samples > size()) {
    throw invalid_parameter("tail length exceeds series length");
  }
  const std::size_t skip = size() - samples;
  TimeSeries out;
  out.sample_rate_hz = sample_rate_hz;
  out.t0_s = t0_s + static_cast<double>(skip) / sample_rate_hz;
  out.s_a_v.assign(s_a_v.begin() + static_cast<std::ptrdiff_t>(skip), s_a_v.end());
  out.s_b_v.assign(s_b_v.begin() + static_cast<std::ptrdiff_t>(skip), s_b_v.end());
  out.x_m.assign(x_m.begin() + static_cast<std::ptrdiff_t>(skip), x_m.end());
  return out;
}

void write_timeseries_csv(const TimeSeries& ts,
                          const std::filesystem::path& path) {
  std::string out = "t_s,s_a_V,s_b_V,x_m\n";
  const double dt = 1.0 / ts.sample_rate_hz;
  for (std::size_t n = 0; n < ts.size(); ++n) {
    out += fmt17(ts.t0_s + static_cast<double>(n) * dt);
    out += ',';
    out += fmt17(ts.s_a_v[n]);
    out += ',';
    out += fmt17(ts.s_b_v[n]);
    out += ',';
    out += fmt17(ts.x_m[n]);
    out += '\n';
  }
  write_text_atomic(path, out);
}

namespace {

struct LoopOde {
  const PendulumBlock& plant;
  const StateSpace& filt;
  double sensor_gain;
  double actuator_gain;
  double sign;
  bool control_on;

  // state layout: [x, v, filter states...]
  void operator()(const double* s, double r, double f_ext, double* ds) const {
    const double x = s[0];
    const double v = s[1];
    const double e = r - sign * sensor_gain * x;
    const double f_act =
        control_on ? actuator_gain * filt.output(s + 2, e) : 0.0;
    ds[0] = v;
    ds[1] = -plant.omega_spring_rad_s * plant.omega_spring_rad_s * x -
            plant.damping_rate_rad_s * v +
            plant.inv_reduced_mass * (f_act + f_ext);
    filt.derivative(s + 2, e, ds + 2);
  }
};

}  // namespace

TimeSeries integrate_dynamics(const LoopConfig& loop, const DriveSpec& drive,
                              const NoiseSpec& noise, double duration_s,
                              double dt_s) {
  loop.validate();
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) {
    throw config_error("integration step must be positive");
  }
  const double corner = loop.max_corner_hz();
  if (dt_s >= 1.0 / (20.0 * corner)) {
    throw config_error("integration step " + fmt17(dt_s) +
                       " s is too coarse for the " + fmt17(corner) +
                       " Hz loop corner");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw config_error("integration duration must be positive");
  }
  const auto steps = static_cast<std::size_t>(std::llround(duration_s / dt_s));
  if (steps == 0) throw config_error("duration shorter than one step");

  const StateSpace filt = StateSpace::realize(loop.filter);
  const LoopOde ode{loop.plant,
                    filt,
                    loop.sensor_gain_v_per_m,
                    loop.actuator_gain_n_per_v,
                    loop.feedback_sign,
                    loop.control_on};

  const std::size_t dim = 2 + filt.order();
  std::vector<double> state(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim),
      scratch(dim);
  state[0] = drive.initial_x_m;
  state[1] = drive.initial_v_m_s;

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_std =
      noise.force_asd_n_rthz > 0.0 ? noise.force_asd_n_rthz * std::sqrt(0.5 / dt_s)
                                   : 0.0;

  const auto det_force = [&](double t) {
    double f = 0.0;
    if (drive.force_amp_n != 0.0) {
      f += drive.force_amp_n * std::sin(kTwoPi * drive.force_freq_hz * t);
    }
    if (noise.seismic_amp_n != 0.0) {
      f += noise.seismic_amp_n * std::sin(kTwoPi * noise.seismic_freq_hz * t);
    }
    return f;
  };
  const auto injection = [&](double t) {
    return drive.injection_amp_v != 0.0
               ? drive.injection_amp_v * std::sin(kTwoPi * drive.injection_freq_hz * t)
               : 0.0;
  };

  TimeSeries ts;
  ts.sample_rate_hz = 1.0 / dt_s;
  ts.s_a_v.resize(steps);
  ts.s_b_v.resize(steps);
  ts.x_m.resize(steps);

  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt_s;
    const double y = loop.sensor_gain_v_per_m * state[0];
    ts.s_a_v[n] = y;
    ts.s_b_v[n] = injection(t) - loop.feedback_sign * y;
    ts.x_m[n] = state[0];

    const double f_noise = noise_std > 0.0 ? noise_std * gauss(rng) : 0.0;
    const double t_mid = t + 0.5 * dt_s;
    const double t_end = t + dt_s;

    ode(state.data(), injection(t), det_force(t) + f_noise, k1.data());
    for (std::size_t i = 0; i < dim; ++i)
      scratch[i] = state[i] + 0.5 * dt_s * k1[i];
    ode(scratch.data(), injection(t_mid), det_force(t_mid) + f_noise, k2.data());
    for (std::size_t i = 0; i < dim; ++i)
      scratch[i] = state[i] + 0.5 * dt_s * k2[i];
    ode(scratch.data(), injection(t_mid), det_force(t_mid) + f_noise, k3.data());
    for (std::size_t i = 0; i < dim; ++i)
      scratch[i] = state[i] + dt_s * k3[i];
    ode(scratch.data(), injection(t_end), det_force(t_end) + f_noise, k4.data());
    for (std::size_t i = 0; i < dim; ++i) {
      state[i] += dt_s / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    if (!std::isfinite(state[0]) || !std::isfinite(state[1])) {
      throw divergence_error("loop state diverged at t = " + fmt17(t_end) + " s");
    }
  }
  return ts;
}

namespace {

// Exact single-bin discrete Fourier sum; the window length is an integer
// number of bin periods so leakage between harmonics vanishes identically.
std::complex<double> dft_bin(const std::vector<double>& ch, std::size_t bin,
                             const std::vector<std::complex<double>>& table) {
  const std::size_t n_samples = ch.size();
  std::complex<double> acc(0.0, 0.0);
  std::size_t idx = 0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    acc += ch[n] * table[idx];
    idx += bin;
    while (idx >= n_samples) idx -= n_samples;
  }
  return acc;
}

double neighbor_rms(const std::vector<double>& ch, std::size_t bin,
                    std::size_t n_samples,
                    const std::vector<std::complex<double>>& table) {
  double acc = 0.0;
  int count = 0;
  for (long offset : {-4L, -3L, -2L, 2L, 3L, 4L}) {
    const long j = static_cast<long>(bin) + offset;
    if (j < 1 || j >= static_cast<long>(n_samples / 2)) continue;
    const std::complex<double> v =
        dft_bin(ch, static_cast<std::size_t>(j), table);
    acc += std::norm(v);
    ++count;
  }
  return count > 0 ? std::sqrt(acc / count) : 0.0;
}

}  // namespace

OltfEstimate estimate_oltf(const TimeSeries& ts, double f_inj_hz) {
  const std::size_t n_samples = ts.size();
  if (n_samples == 0) throw invalid_parameter("empty time series");
  if (ts.s_a_v.size() != n_samples || ts.s_b_v.size() != n_samples) {
    throw invalid_parameter("time series channels differ in length");
  }
  if (!(f_inj_hz > 0.0) || f_inj_hz >= 0.5 * ts.sample_rate_hz) {
    throw invalid_parameter(
        "injection frequency is not resolvable at the sample rate");
  }
  const double cycles =
      f_inj_hz * static_cast<double>(n_samples) / ts.sample_rate_hz;
  const auto bin = static_cast<std::size_t>(std::llround(cycles));
  if (std::abs(cycles - static_cast<double>(bin)) >
          1e-6 * std::max(1.0, cycles) ||
      bin < 5) {
    throw invalid_parameter(
        "window must hold an integer number (>= 5) of injection cycles");
  }

  std::vector<std::complex<double>> table(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) {
    table[n] = std::polar(1.0, -kTwoPi * static_cast<double>(n) /
                                   static_cast<double>(n_samples));
  }

  const std::complex<double> xa = dft_bin(ts.s_a_v, bin, table);
  const std::complex<double> xb = dft_bin(ts.s_b_v, bin, table);
  if (std::abs(xb) == 0.0) {
    throw loop_singularity("reference channel has no injection-bin amplitude");
  }

  const double na = neighbor_rms(ts.s_a_v, bin, n_samples, table);
  const double nb = neighbor_rms(ts.s_b_v, bin, n_samples, table);
  const double snr_a =
      na > 0.0 ? std::abs(xa) / na : std::numeric_limits<double>::infinity();
  const double snr_b =
      nb > 0.0 ? std::abs(xb) / nb : std::numeric_limits<double>::infinity();

  OltfEstimate estimate;
  estimate.value = xa / xb;
  estimate.snr = std::min(snr_a, snr_b);
  estimate.confident = estimate.snr >= 3.0;
  return estimate;
}

est::FrequencyResponse measure_sweep(const LoopConfig& loop,
                                     std::span<const double> freqs_hz,
                                     const SweepSettings& settings) {
  loop.validate();
  if (freqs_hz.empty()) return {};
  for (double f : freqs_hz) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw invalid_parameter("injection frequencies must be positive");
    }
  }
  if (settings.measure_cycles < 5) {
    throw invalid_parameter("need at least 5 measurement cycles per point");
  }
  if (settings.settle_cycles < 0) {
    throw invalid_parameter("settle cycle count must be non-negative");
  }
  if (!(settings.injection_amp_v >= 0.0)) {
    throw invalid_parameter("injection amplitude must be non-negative");
  }
  const double dt_max =
      settings.dt_max_s > 0.0 ? settings.dt_max_s : default_dt_s(loop);

  std::vector<est::ResponsePoint> points(freqs_hz.size());
  parallel_for(freqs_hz.size(), settings.jobs, [&](std::size_t i) {
    const double f = freqs_hz[i];
    // Integer samples per cycle keeps the demodulation window leakage-free.
    const auto samples_per_cycle =
        static_cast<std::size_t>(std::ceil(1.0 / (f * dt_max)));
    const double dt = 1.0 / (f * static_cast<double>(samples_per_cycle));
    const auto total_cycles = static_cast<std::size_t>(settings.settle_cycles) +
                              static_cast<std::size_t>(settings.measure_cycles);

    DriveSpec drive;
    drive.injection_amp_v = settings.injection_amp_v;
    drive.injection_freq_hz = f;
    NoiseSpec noise = settings.noise;
    noise.seed = mix_seed(settings.noise.seed, i);

    const double duration =
        static_cast<double>(total_cycles * samples_per_cycle) * dt;
    const TimeSeries ts = integrate_dynamics(loop, drive, noise, duration, dt);
    const TimeSeries window = ts.tail(
        static_cast<std::size_t>(settings.measure_cycles) * samples_per_cycle);
    const OltfEstimate estimate = estimate_oltf(window, f);
    points[i] = {f, estimate.value, estimate.confident};
  });

  est::FrequencyResponse response;
  response.points = std::move(points);
  response.sort_by_frequency();
  return response;
}

est::FrequencyResponse to_plant_response(const est::FrequencyResponse& oltf,
                                         const LoopConfig& loop) {
  loop.validate();
  est::FrequencyResponse plant = oltf;
  for (est::ResponsePoint& p : plant.points) {
    const double omega = kTwoPi * p.f_hz;
    p.value /= loop.sensor_gain_v_per_m * loop.actuator_gain_n_per_v *
               loop.filter.eval(omega);
  }
  return plant;
}

}  // namespace optolev::loop
