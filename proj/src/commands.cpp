#include "optolev/commands.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "optolev/csvio.hpp"
#include "optolev/loop.hpp"

namespace optolev::cmd {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string fmt_pm(const Uncertain& u) {
  return fmt(u.value) + " +/- " + fmt(u.sigma);
}

const cfg::CavitySection& measurement_cavity(
    const cfg::ExperimentConfig& config) {
  if (!config.upper_cavity) {
    throw config_error("missing [upper_cavity] section");
  }
  return *config.upper_cavity;
}

const cfg::LoopSection& loop_section(const cfg::ExperimentConfig& config) {
  if (!config.loop) {
    throw config_error("missing [loop] section");
  }
  return *config.loop;
}

double measurement_center_distance(const cfg::ExperimentConfig& config) {
  const cfg::CavitySection& cavity = measurement_cavity(config);
  return optics::center_distance(cavity.length_m, cavity.r_fixed_m,
                                 cavity.r_lev_m);
}

template <typename Fn>
auto at_stage(const std::string& stage, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const physics_error& e) {
    throw physics_error(stage + ": " + e.what());
  }
}

void ensure_out_dir(const std::filesystem::path& out_dir) {
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
}

std::string fit_row(const est::FitResult& fit) {
  std::string row = fmt17(fit.freq_hz.value) + "," + fmt17(fit.freq_hz.sigma) +
                    "," + fmt17(fit.quality.value) + "," +
                    fmt17(fit.quality.sigma) + "," + fmt17(fit.gain.value) +
                    "," + fmt17(fit.gain.sigma) + "," +
                    fmt17(fit.residual_deg) + "," +
                    (fit.converged ? "1" : "0");
  return row;
}

constexpr const char* kFitColumns =
    "f_Hz,sigma_f_Hz,Q,sigma_Q,gain_m_per_N,sigma_gain_m_per_N,residual_deg,"
    "converged";

}  // namespace

double configured_spring_n_per_m(const cfg::ExperimentConfig& config,
                                 double power_w) {
  const optics::Cavity cavity =
      cfg::build_cavity(measurement_cavity(config), power_w);
  return optics::horizontal_spring(cavity, 0.0).real();
}

Interval configured_band(const cfg::ExperimentConfig& config,
                         const Uncertain& power_w) {
  const cfg::CavitySection& cavity = measurement_cavity(config);
  const Uncertain a{measurement_center_distance(config), cavity.a_sigma_m};
  return optics::predicted_spring_band(a, power_w);
}

StateMeasurement measure_state(const cfg::ExperimentConfig& config,
                               double k_ext_n_per_m, const Uncertain& power_w,
                               int repeats, std::uint64_t state_stream,
                               int jobs, const std::string& stage) {
  if (repeats < 1) {
    throw config_error("sweep repeats must be at least 1");
  }
  const cfg::LoopSection& loop_cfg = loop_section(config);
  if (loop_cfg.injection_frequencies_hz.empty()) {
    throw config_error("loop injection_frequencies must be set");
  }
  const loop::LoopConfig closed = cfg::build_loop(config, k_ext_n_per_m);
  loop::SweepSettings settings;
  settings.dt_max_s = config.simulation.dt_s;
  settings.settle_cycles = config.simulation.settle_cycles;
  settings.measure_cycles = config.simulation.measure_cycles;
  settings.injection_amp_v = loop_cfg.injection_amplitude_v;
  settings.noise.force_asd_n_rthz = loop_cfg.force_noise_asd_n_rthz;
  settings.noise.seismic_amp_n = loop_cfg.seismic_amplitude_n;
  settings.noise.seismic_freq_hz = loop_cfg.seismic_frequency_hz;
  settings.jobs = jobs;
  const std::uint64_t base = mix_seed(config.simulation.seed, state_stream);

  StateMeasurement state;
  state.responses.reserve(static_cast<std::size_t>(repeats));
  state.fits.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    settings.noise.seed = mix_seed(base, static_cast<std::uint64_t>(r));
    const std::string run_stage = stage + ", repeat " + std::to_string(r);
    est::FrequencyResponse response = at_stage(run_stage, [&] {
      return loop::measure_sweep(closed, loop_cfg.injection_frequencies_hz,
                                 settings);
    });
    response.power_w = power_w.value;
    response.power_sigma_w = power_w.sigma;
    response.repeat_index = r;
    const est::FrequencyResponse plant =
        loop::to_plant_response(response, closed);
    state.fits.push_back(
        at_stage(run_stage, [&] { return est::fit_resonance(plant); }));
    state.responses.push_back(std::move(response));
  }
  if (repeats >= 2) {
    state.freq_hz =
        at_stage(stage, [&] { return est::aggregate_repeats(state.fits); });
  } else {
    if (!state.fits.front().converged) {
      throw physics_error(stage + ": resonance fit did not converge");
    }
    state.freq_hz = state.fits.front().freq_hz;
  }
  return state;
}

MeasureOutcome measure_experiment(const cfg::ExperimentConfig& config,
                                  int jobs) {
  const cfg::CavitySection& cavity = measurement_cavity(config);
  const mech::TorsionalPendulum pendulum = cfg::build_pendulum(config);
  const int repeats = config.sweep ? config.sweep->repeats : 1;

  MeasureOutcome outcome;
  outcome.k_true_n_per_m = configured_spring_n_per_m(config, cavity.power_w);
  outcome.band = configured_band(
      config, Uncertain{cavity.power_w, cavity.power_sigma_w});
  outcome.off = measure_state(config, 0.0, Uncertain{0.0, 0.0}, repeats, 0,
                              jobs, "laser off");
  outcome.on = measure_state(config, outcome.k_true_n_per_m,
                             Uncertain{cavity.power_w, cavity.power_sigma_w},
                             repeats, 1, jobs, "laser on");
  outcome.f_off_hz = outcome.off.freq_hz;
  outcome.f_on_hz = outcome.on.freq_hz;
  outcome.spring =
      mech::spring_uncertainty(pendulum.inertia_kg_m2, pendulum.lever_arm_m,
                               outcome.f_off_hz, outcome.f_on_hz);
  const Interval estimate{outcome.spring.k_n_per_m - outcome.spring.sigma_n_per_m,
                          outcome.spring.k_n_per_m + outcome.spring.sigma_n_per_m};
  outcome.consistent = estimate.overlaps(outcome.band);
  return outcome;
}

SweepOutcome sweep_experiment(const cfg::ExperimentConfig& config, int jobs) {
  if (!config.sweep) {
    throw config_error("missing [sweep] section");
  }
  const std::vector<double>& powers = config.sweep->powers_w;
  if (powers.size() < 2) {
    throw config_error("sweep powers must list at least two powers");
  }
  bool has_zero = false;
  for (double p : powers) {
    if (!std::isfinite(p) || p < 0.0) {
      throw config_error("sweep powers must be non-negative");
    }
    if (p == 0.0) has_zero = true;
  }
  if (!has_zero) {
    throw config_error("sweep powers must include a zero-power reference");
  }
  const cfg::CavitySection& cavity = measurement_cavity(config);
  const mech::TorsionalPendulum pendulum = cfg::build_pendulum(config);
  const int repeats = config.sweep->repeats;
  const double rel_power_sigma =
      cavity.power_w > 0.0 ? cavity.power_sigma_w / cavity.power_w : 0.0;

  const StateMeasurement off = measure_state(
      config, 0.0, Uncertain{0.0, 0.0}, repeats, 0, jobs, "laser off");

  SweepOutcome outcome;
  std::vector<est::PowerPoint> points;
  std::vector<Interval> bands;
  points.reserve(powers.size());
  bands.reserve(powers.size());
  outcome.per_power.reserve(powers.size());
  for (std::size_t j = 0; j < powers.size(); ++j) {
    const double p = powers[j];
    const Uncertain power{p, p * rel_power_sigma};
    PowerFits entry;
    entry.power_w = p;
    Uncertain freq;
    if (p == 0.0) {
      entry.responses = off.responses;
      entry.fits = off.fits;
      freq = off.freq_hz;
    } else {
      const double k_ext = configured_spring_n_per_m(config, p);
      const std::string stage = "power " + fmt(p) + " W";
      const StateMeasurement on = measure_state(
          config, k_ext, power, repeats, static_cast<std::uint64_t>(j) + 1,
          jobs, stage);
      entry.responses = on.responses;
      entry.fits = on.fits;
      freq = on.freq_hz;
    }
    entry.freq_hz = freq;
    est::PowerPoint point;
    point.power_w = power;
    point.spring = mech::spring_uncertainty(
        pendulum.inertia_kg_m2, pendulum.lever_arm_m, off.freq_hz, freq);
    points.push_back(point);
    bands.push_back(configured_band(config, power));
    outcome.per_power.push_back(std::move(entry));
  }

  const double a = measurement_center_distance(config);
  const double analytic_slope = 2.0 / (a * kSpeedOfLight);
  outcome.report = est::power_sweep_analysis(points, bands, analytic_slope);
  return outcome;
}

int run_stability(const cfg::ExperimentConfig& config, const Options& options,
                  std::ostream& out) {
  const optics::SandwichConfig sandwich = cfg::build_sandwich(config);
  const optics::StabilityMatrix matrix = optics::stability_matrix(sandwich);
  const optics::StabilityReport report = optics::is_stable(matrix);

  out << "axis x:    k = " << fmt(matrix.k_x_n_per_m) << " N/m ("
      << (report.axis_ok[0] ? "ok" : "not restoring") << ")\n";
  out << "axis z:    k = " << fmt(matrix.k_z_n_per_m) << " N/m ("
      << (report.axis_ok[1] ? "ok" : "not restoring") << ")\n";
  out << "axis beta: k = " << fmt(matrix.k_beta_nm_per_rad) << " N m/rad ("
      << (report.axis_ok[2] ? "ok" : "not restoring") << ")\n";
  if (report.stable) {
    out << "verdict: stable\n";
  } else {
    out << "verdict: unstable (" << report.failing_axes() << ")\n";
  }

  if (!options.out_dir.empty()) {
    ensure_out_dir(options.out_dir);
    std::string csv =
        "k_x_N_per_m,k_z_N_per_m,k_beta_Nm_per_rad,ok_x,ok_z,ok_beta,stable\n";
    csv += fmt17(matrix.k_x_n_per_m) + "," + fmt17(matrix.k_z_n_per_m) + "," +
           fmt17(matrix.k_beta_nm_per_rad) + "," +
           (report.axis_ok[0] ? "1" : "0") + "," +
           (report.axis_ok[1] ? "1" : "0") + "," +
           (report.axis_ok[2] ? "1" : "0") + "," +
           (report.stable ? "1" : "0") + "\n";
    const std::filesystem::path path = options.out_dir / "stability.csv";
    write_text_atomic(path, csv);
    out << "wrote " << path.string() << "\n";
  }
  return report.stable ? 0 : 1;
}

int run_bode(const cfg::ExperimentConfig& config, const std::string& block,
             double f_min_hz, double f_max_hz, int n_points,
             const Options& options, std::ostream& out) {
  if (!(f_min_hz > 0.0) || !(f_min_hz < f_max_hz)) {
    throw invalid_parameter("bode range requires 0 < f_min < f_max");
  }
  if (n_points < 2) {
    throw invalid_parameter("bode requires at least 2 points");
  }

  std::string unit;
  std::function<std::complex<double>(double)> eval;
  if (block == "H" || block == "Hprime") {
    const mech::TorsionalPendulum pendulum = cfg::build_pendulum(config);
    const double k_ext =
        block == "H" ? 0.0
                     : configured_spring_n_per_m(
                           config, measurement_cavity(config).power_w);
    unit = "m_per_N";
    eval = [pendulum, k_ext](double omega) {
      return mech::effective_tf(pendulum, k_ext, omega);
    };
  } else if (block == "F") {
    const double gain = loop_section(config).filter_gain;
    unit = "V_per_V";
    eval = [gain](double omega) { return loop::filter_tf(gain, omega); };
  } else if (block == "S") {
    const double gain = loop_section(config).sensor_gain_v_per_m;
    unit = "V_per_m";
    eval = [gain](double) { return std::complex<double>(gain, 0.0); };
  } else if (block == "A") {
    const double gain = loop_section(config).actuator_gain_n_per_v;
    unit = "N_per_V";
    eval = [gain](double) { return std::complex<double>(gain, 0.0); };
  } else if (block == "G" || block == "Gprime") {
    const double k_ext =
        block == "G" ? 0.0
                     : configured_spring_n_per_m(
                           config, measurement_cavity(config).power_w);
    const loop::LoopConfig closed = cfg::build_loop(config, k_ext);
    unit = "V_per_V";
    eval = [closed](double omega) { return loop::open_loop(closed, omega); };
  } else {
    throw invalid_parameter(
        "unknown block \"" + block +
        "\" (expected H, Hprime, F, S, A, G or Gprime)");
  }

  std::string csv = "f_Hz,re_" + unit + ",im_" + unit + ",mag_dB,phase_deg\n";
  const double ratio = f_max_hz / f_min_hz;
  for (int i = 0; i < n_points; ++i) {
    const double frac = static_cast<double>(i) / (n_points - 1);
    const double f = f_min_hz * std::pow(ratio, frac);
    const std::complex<double> value = eval(kTwoPi * f);
    csv += fmt17(f) + "," + fmt17(value.real()) + "," + fmt17(value.imag()) +
           "," + fmt17(magnitude_db(std::abs(value))) + "," +
           fmt17(std::atan2(value.imag(), value.real()) * 180.0 / kPi) + "\n";
  }

  if (options.out_dir.empty()) {
    out << csv;
  } else {
    ensure_out_dir(options.out_dir);
    const std::filesystem::path path =
        options.out_dir / ("bode_" + block + ".csv");
    write_text_atomic(path, csv);
    out << "wrote " << path.string() << " (" << n_points << " rows, " << block
        << " from " << fmt(f_min_hz) << " Hz to " << fmt(f_max_hz)
        << " Hz)\n";
  }
  return 0;
}

int run_measure(const cfg::ExperimentConfig& config, const Options& options,
                std::ostream& out) {
  const MeasureOutcome outcome = measure_experiment(config, options.jobs);
  const cfg::CavitySection& cavity = measurement_cavity(config);

  out << "laser off: f = " << fmt_pm(outcome.f_off_hz) << " Hz\n";
  out << "laser on (P = " << fmt_pm(Uncertain{cavity.power_w,
                                              cavity.power_sigma_w})
      << " W): f = " << fmt_pm(outcome.f_on_hz) << " Hz\n";
  out << "spring constant: k = "
      << fmt_pm(Uncertain{outcome.spring.k_n_per_m,
                          outcome.spring.sigma_n_per_m})
      << " N/m\n";
  out << "predicted band: [" << fmt(outcome.band.lo) << ", "
      << fmt(outcome.band.hi) << "] N/m\n";
  out << "band consistency: " << (outcome.consistent ? "yes" : "no") << "\n";

  if (!options.out_dir.empty()) {
    ensure_out_dir(options.out_dir);
    for (const est::FrequencyResponse& response : outcome.off.responses) {
      est::write_response_csv(
          response, options.out_dir /
                        ("response_off_r" +
                         std::to_string(response.repeat_index) + ".csv"));
    }
    for (const est::FrequencyResponse& response : outcome.on.responses) {
      est::write_response_csv(
          response, options.out_dir /
                        ("response_on_r" +
                         std::to_string(response.repeat_index) + ".csv"));
    }

    std::string fits = std::string("state,repeat,") + kFitColumns + "\n";
    for (std::size_t r = 0; r < outcome.off.fits.size(); ++r) {
      fits += "off," + std::to_string(r) + "," + fit_row(outcome.off.fits[r]) +
              "\n";
    }
    for (std::size_t r = 0; r < outcome.on.fits.size(); ++r) {
      fits += "on," + std::to_string(r) + "," + fit_row(outcome.on.fits[r]) +
              "\n";
    }
    write_text_atomic(options.out_dir / "fits.csv", fits);

    std::string spring =
        "k_Npm,sigma_k_Npm,f_off_Hz,sigma_f_off_Hz,f_on_Hz,sigma_f_on_Hz,"
        "band_lo_Npm,band_hi_Npm,consistent\n";
    spring += fmt17(outcome.spring.k_n_per_m) + "," +
              fmt17(outcome.spring.sigma_n_per_m) + "," +
              fmt17(outcome.f_off_hz.value) + "," +
              fmt17(outcome.f_off_hz.sigma) + "," +
              fmt17(outcome.f_on_hz.value) + "," +
              fmt17(outcome.f_on_hz.sigma) + "," + fmt17(outcome.band.lo) +
              "," + fmt17(outcome.band.hi) + "," +
              (outcome.consistent ? "1" : "0") + "\n";
    write_text_atomic(options.out_dir / "spring.csv", spring);

    std::ostringstream summary;
    summary << "virtual spring measurement\n"
            << "injected spring: " << fmt(outcome.k_true_n_per_m) << " N/m\n"
            << "laser off: f = " << fmt_pm(outcome.f_off_hz) << " Hz\n"
            << "laser on:  f = " << fmt_pm(outcome.f_on_hz) << " Hz\n"
            << "recovered spring: " << fmt(outcome.spring.k_n_per_m)
            << " +/- " << fmt(outcome.spring.sigma_n_per_m) << " N/m\n"
            << "predicted band: [" << fmt(outcome.band.lo) << ", "
            << fmt(outcome.band.hi) << "] N/m\n"
            << "band consistency: " << (outcome.consistent ? "yes" : "no")
            << "\n";
    write_text_atomic(options.out_dir / "summary.txt", summary.str());
    out << "wrote " << (options.out_dir / "spring.csv").string() << "\n";
  }
  return outcome.consistent ? 0 : 1;
}

int run_sweep(const cfg::ExperimentConfig& config, const Options& options,
              std::ostream& out) {
  const SweepOutcome outcome = sweep_experiment(config, options.jobs);
  out << outcome.report.summary();

  if (!options.out_dir.empty()) {
    ensure_out_dir(options.out_dir);
    est::write_sweep_csv(outcome.report, options.out_dir / "sweep.csv");
    std::string fits = std::string("P_W,repeat,") + kFitColumns + "\n";
    for (std::size_t j = 0; j < outcome.per_power.size(); ++j) {
      const PowerFits& entry = outcome.per_power[j];
      for (const est::FrequencyResponse& response : entry.responses) {
        est::write_response_csv(
            response, options.out_dir /
                          ("response_p" + std::to_string(j) + "_r" +
                           std::to_string(response.repeat_index) + ".csv"));
      }
      for (std::size_t r = 0; r < entry.fits.size(); ++r) {
        fits += fmt17(entry.power_w) + "," + std::to_string(r) + "," +
                fit_row(entry.fits[r]) + "\n";
      }
    }
    write_text_atomic(options.out_dir / "fits.csv", fits);
    out << "wrote " << (options.out_dir / "sweep.csv").string() << "\n";
  }
  return outcome.report.all_consistent ? 0 : 1;
}

}  // namespace optolev::cmd
