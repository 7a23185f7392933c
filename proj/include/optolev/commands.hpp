#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "optolev/config.hpp"
#include "optolev/estimation.hpp"
#include "optolev/mechanics.hpp"
#include "optolev/optics.hpp"

namespace optolev::cmd {

struct Options {
  std::filesystem::path out_dir;  // empty disables file output
  int jobs = 1;
};

// Static spring constant 2P/(a c) of the configured measurement cavity.
double configured_spring_n_per_m(const cfg::ExperimentConfig& config,
                                 double power_w);

// Spring band implied by the configured center-distance uncertainty and the
// given intracavity power.
Interval configured_band(const cfg::ExperimentConfig& config,
                         const Uncertain& power_w);

// One simulated resonance measurement (a frequency sweep per repeat plus the
// resonance fits and the aggregated frequency).
struct StateMeasurement {
  std::vector<est::FrequencyResponse> responses;  // raw open-loop ratios
  std::vector<est::FitResult> fits;
  Uncertain freq_hz;
};

StateMeasurement measure_state(const cfg::ExperimentConfig& config,
                               double k_ext_n_per_m, const Uncertain& power_w,
                               int repeats, std::uint64_t state_stream,
                               int jobs, const std::string& stage);

struct MeasureOutcome {
  Uncertain f_off_hz;
  Uncertain f_on_hz;
  double k_true_n_per_m = 0.0;  // spring injected at the configured power
  mech::SpringEstimate spring;
  Interval band;
  bool consistent = false;
  StateMeasurement off;
  StateMeasurement on;
};

// Laser-off/laser-on virtual experiment at the configured power.
MeasureOutcome measure_experiment(const cfg::ExperimentConfig& config,
                                  int jobs);

struct PowerFits {
  double power_w = 0.0;
  std::vector<est::FrequencyResponse> responses;
  std::vector<est::FitResult> fits;
  Uncertain freq_hz;
};

struct SweepOutcome {
  est::SweepReport report;
  std::vector<PowerFits> per_power;
};

SweepOutcome sweep_experiment(const cfg::ExperimentConfig& config, int jobs);

// CLI entry points; print a human summary, write CSVs into out_dir, and
// return the process exit code.
int run_stability(const cfg::ExperimentConfig& config, const Options& options,
                  std::ostream& out);
int run_bode(const cfg::ExperimentConfig& config, const std::string& block,
             double f_min_hz, double f_max_hz, int n_points,
             const Options& options, std::ostream& out);
int run_measure(const cfg::ExperimentConfig& config, const Options& options,
                std::ostream& out);
int run_sweep(const cfg::ExperimentConfig& config, const Options& options,
              std::ostream& out);

}  // namespace optolev::cmd
