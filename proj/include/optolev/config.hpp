#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "optolev/common.hpp"
#include "optolev/loop.hpp"
#include "optolev/mechanics.hpp"
#include "optolev/optics.hpp"

namespace optolev::cfg {

// All values are SI: meters, watts, hertz, kilograms, seconds.

struct CavitySection {
  double length_m = 0.0;
  double r_fixed_m = 0.0;
  double r_lev_m = 0.0;
  double finesse = 0.0;
  double power_w = 0.0;
  double power_sigma_w = 0.0;
  double a_sigma_m = 0.0;  // uncertainty of the center distance
  double transmissivity = 0.0;
  double transmissivity_sigma = 0.0;
  optics::Orientation orientation = optics::Orientation::Upper;
};

struct SandwichSection {
  double mass_kg = 0.0;
  double curvature_m = 0.0;
  double gravity_m_s2 = kStandardGravity;
  double k_opt_upper_n_per_m = 0.0;
  double k_opt_lower_n_per_m = 0.0;
  // Intracavity powers for the static stability analysis. The cavity
  // sections keep the powers of the running measurement; negative means
  // "use the cavity's own power".
  double power_upper_w = -1.0;
  double power_lower_w = -1.0;
};

struct PendulumSection {
  double inertia_kg_m2 = 0.0;
  double lever_arm_m = 0.0;
  double natural_frequency_hz = 0.0;
  double quality_factor = 0.0;
  double mass_kg = 0.0;
};

struct LoopSection {
  double sensor_gain_v_per_m = 0.0;
  double actuator_gain_n_per_v = 0.0;
  double filter_gain = 0.0;
  double injection_amplitude_v = 0.0;
  std::vector<double> injection_frequencies_hz;
  double feedback_sign = 1.0;
  double force_noise_asd_n_rthz = 0.0;
  double seismic_amplitude_n = 0.0;
  double seismic_frequency_hz = 0.05;
};

struct SimulationSection {
  double dt_s = 0.0;  // 0 selects the automatic step
  int settle_cycles = 6;
  int measure_cycles = 8;
  std::uint64_t seed = 1;
};

struct SweepSection {
  std::vector<double> powers_w;
  int repeats = 1;
};

struct ExperimentConfig {
  std::optional<CavitySection> upper_cavity;
  std::optional<CavitySection> lower_cavity;
  std::optional<SandwichSection> sandwich;
  std::optional<PendulumSection> pendulum;
  std::optional<LoopSection> loop;
  SimulationSection simulation;
  std::optional<SweepSection> sweep;
};

// Parses sectioned key = value text. Unknown sections or keys are rejected
// with their source location; later definitions overlay earlier ones, so a
// file can be applied on top of the built-in profile.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& source_name,
                              const ExperimentConfig& base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const ExperimentConfig& base = {});

// Built-in parameter set for the published sandwich experiment plus the
// shipped toy-stable full-sandwich profile.
ExperimentConfig paper_profile();
const std::string& paper_profile_text();

// Applies one "section.key=value" override.
ExperimentConfig apply_override(const ExperimentConfig& base,
                                const std::string& assignment);

// Domain-object builders; each throws config_error when its section is
// missing and validates the module invariants.
optics::Cavity build_cavity(const CavitySection& section,
                            double power_override_w = -1.0);
optics::SandwichConfig build_sandwich(const ExperimentConfig& config);
mech::TorsionalPendulum build_pendulum(const ExperimentConfig& config);
loop::LoopConfig build_loop(const ExperimentConfig& config,
                            double k_ext_n_per_m);

}  // namespace optolev::cfg
