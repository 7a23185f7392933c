#include "optolev/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace optolev::cfg {

namespace {

enum class SectionId {
  None,
  UpperCavity,
  LowerCavity,
  Sandwich,
  Pendulum,
  Loop,
  Simulation,
  Sweep,
};

[[noreturn]] void fail(const std::string& source, int line,
                       const std::string& message) {
  throw config_error(source + ":" + std::to_string(line) + ": " + message);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view value, const std::string& source,
                    int line) {
  const std::string_view v = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    fail(source, line, "expected a number, got \"" + std::string(v) + "\"");
  }
  if (!std::isfinite(out)) {
    fail(source, line, "value must be finite");
  }
  return out;
}

int parse_count(std::string_view value, const std::string& source, int line) {
  const std::string_view v = trim(value);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    fail(source, line, "expected an integer, got \"" + std::string(v) + "\"");
  }
  return out;
}

std::uint64_t parse_seed(std::string_view value, const std::string& source,
                         int line) {
  const std::string_view v = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    fail(source, line,
         "expected an unsigned integer, got \"" + std::string(v) + "\"");
  }
  return out;
}

std::vector<double> parse_list(std::string_view value,
                               const std::string& source, int line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string_view item =
        value.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                            : comma - start);
    out.push_back(parse_number(item, source, line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) {
    fail(source, line, "expected a comma-separated list of numbers");
  }
  return out;
}

optics::Orientation parse_orientation(std::string_view value,
                                      const std::string& source, int line) {
  const std::string_view v = trim(value);
  if (v == "upper") return optics::Orientation::Upper;
  if (v == "lower") return optics::Orientation::Lower;
  fail(source, line, "orientation must be \"upper\" or \"lower\"");
}

SectionId section_id(std::string_view name, const std::string& source,
                     int line) {
  if (name == "upper_cavity") return SectionId::UpperCavity;
  if (name == "lower_cavity") return SectionId::LowerCavity;
  if (name == "sandwich") return SectionId::Sandwich;
  if (name == "pendulum") return SectionId::Pendulum;
  if (name == "loop") return SectionId::Loop;
  if (name == "simulation") return SectionId::Simulation;
  if (name == "sweep") return SectionId::Sweep;
  fail(source, line, "unknown section [" + std::string(name) + "]");
}

void apply_cavity_key(CavitySection& s, std::string_view key,
                      std::string_view value, const std::string& source,
                      int line) {
  if (key == "length") {
    s.length_m = parse_number(value, source, line);
  } else if (key == "r_fixed") {
    s.r_fixed_m = parse_number(value, source, line);
  } else if (key == "r_lev") {
    s.r_lev_m = parse_number(value, source, line);
  } else if (key == "finesse") {
    s.finesse = parse_number(value, source, line);
  } else if (key == "power") {
    s.power_w = parse_number(value, source, line);
  } else if (key == "power_sigma") {
    s.power_sigma_w = parse_number(value, source, line);
  } else if (key == "a_sigma") {
    s.a_sigma_m = parse_number(value, source, line);
  } else if (key == "transmissivity") {
    s.transmissivity = parse_number(value, source, line);
  } else if (key == "transmissivity_sigma") {
    s.transmissivity_sigma = parse_number(value, source, line);
  } else if (key == "orientation") {
    s.orientation = parse_orientation(value, source, line);
  } else {
    fail(source, line, "unknown cavity key \"" + std::string(key) + "\"");
  }
}

void apply_sandwich_key(SandwichSection& s, std::string_view key,
                        std::string_view value, const std::string& source,
                        int line) {
  if (key == "mass") {
    s.mass_kg = parse_number(value, source, line);
  } else if (key == "curvature") {
    s.curvature_m = parse_number(value, source, line);
  } else if (key == "gravity") {
    s.gravity_m_s2 = parse_number(value, source, line);
  } else if (key == "k_opt_upper") {
    s.k_opt_upper_n_per_m = parse_number(value, source, line);
  } else if (key == "k_opt_lower") {
    s.k_opt_lower_n_per_m = parse_number(value, source, line);
  } else if (key == "power_upper") {
    s.power_upper_w = parse_number(value, source, line);
  } else if (key == "power_lower") {
    s.power_lower_w = parse_number(value, source, line);
  } else {
    fail(source, line, "unknown sandwich key \"" + std::string(key) + "\"");
  }
}

void apply_pendulum_key(PendulumSection& s, std::string_view key,
                        std::string_view value, const std::string& source,
                        int line) {
  if (key == "inertia") {
    s.inertia_kg_m2 = parse_number(value, source, line);
  } else if (key == "lever_arm") {
    s.lever_arm_m = parse_number(value, source, line);
  } else if (key == "natural_frequency") {
    s.natural_frequency_hz = parse_number(value, source, line);
  } else if (key == "quality_factor") {
    s.quality_factor = parse_number(value, source, line);
  } else if (key == "mass") {
    s.mass_kg = parse_number(value, source, line);
  } else {
    fail(source, line, "unknown pendulum key \"" + std::string(key) + "\"");
  }
}

void apply_loop_key(LoopSection& s, std::string_view key,
                    std::string_view value, const std::string& source,
                    int line) {
  if (key == "sensor_gain") {
    s.sensor_gain_v_per_m = parse_number(value, source, line);
  } else if (key == "actuator_gain") {
    s.actuator_gain_n_per_v = parse_number(value, source, line);
  } else if (key == "filter_gain") {
    s.filter_gain = parse_number(value, source, line);
  } else if (key == "injection_amplitude") {
    s.injection_amplitude_v = parse_number(value, source, line);
  } else if (key == "injection_frequencies") {
    s.injection_frequencies_hz = parse_list(value, source, line);
  } else if (key == "feedback_sign") {
    s.feedback_sign = parse_number(value, source, line);
  } else if (key == "force_noise_asd") {
    s.force_noise_asd_n_rthz = parse_number(value, source, line);
  } else if (key == "seismic_amplitude") {
    s.seismic_amplitude_n = parse_number(value, source, line);
  } else if (key == "seismic_frequency") {
    s.seismic_frequency_hz = parse_number(value, source, line);
  } else {
    fail(source, line, "unknown loop key \"" + std::string(key) + "\"");
  }
}

void apply_simulation_key(SimulationSection& s, std::string_view key,
                          std::string_view value, const std::string& source,
                          int line) {
  if (key == "dt") {
    s.dt_s = parse_number(value, source, line);
  } else if (key == "settle_cycles") {
    s.settle_cycles = parse_count(value, source, line);
  } else if (key == "measure_cycles") {
    s.measure_cycles = parse_count(value, source, line);
  } else if (key == "seed") {
    s.seed = parse_seed(value, source, line);
  } else {
    fail(source, line, "unknown simulation key \"" + std::string(key) + "\"");
  }
}

void apply_sweep_key(SweepSection& s, std::string_view key,
                     std::string_view value, const std::string& source,
                     int line) {
  if (key == "powers") {
    s.powers_w = parse_list(value, source, line);
  } else if (key == "repeats") {
    s.repeats = parse_count(value, source, line);
  } else {
    fail(source, line, "unknown sweep key \"" + std::string(key) + "\"");
  }
}

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw config_error(std::string(what) + " must be positive");
  }
}

void require_non_negative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw config_error(std::string(what) + " must be non-negative");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::string& source_name,
                              const ExperimentConfig& base) {
  ExperimentConfig config = base;
  SectionId section = SectionId::None;
  std::istringstream stream(text);
  std::string raw;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    std::string_view sv = raw;
    if (const std::size_t hash = sv.find_first_of("#;");
        hash != std::string_view::npos) {
      sv = sv.substr(0, hash);
    }
    sv = trim(sv);
    if (sv.empty()) continue;
    if (sv.front() == '[') {
      if (sv.back() != ']') {
        fail(source_name, line, "unterminated section header");
      }
      const std::string_view name = trim(sv.substr(1, sv.size() - 2));
      section = section_id(name, source_name, line);
      switch (section) {
        case SectionId::UpperCavity:
          if (!config.upper_cavity) {
            config.upper_cavity.emplace();
            config.upper_cavity->orientation = optics::Orientation::Upper;
          }
          break;
        case SectionId::LowerCavity:
          if (!config.lower_cavity) {
            config.lower_cavity.emplace();
            config.lower_cavity->orientation = optics::Orientation::Lower;
          }
          break;
        case SectionId::Sandwich:
          if (!config.sandwich) config.sandwich.emplace();
          break;
        case SectionId::Pendulum:
          if (!config.pendulum) config.pendulum.emplace();
          break;
        case SectionId::Loop:
          if (!config.loop) config.loop.emplace();
          break;
        case SectionId::Simulation:
          break;
        case SectionId::Sweep:
          if (!config.sweep) config.sweep.emplace();
          break;
        case SectionId::None:
          break;
      }
      continue;
    }
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      fail(source_name, line, "expected key = value");
    }
    const std::string_view key = trim(sv.substr(0, eq));
    const std::string_view value = trim(sv.substr(eq + 1));
    if (key.empty()) {
      fail(source_name, line, "empty key");
    }
    switch (section) {
      case SectionId::None:
        fail(source_name, line, "key \"" + std::string(key) +
                                    "\" appears before any section header");
      case SectionId::UpperCavity:
        apply_cavity_key(*config.upper_cavity, key, value, source_name, line);
        break;
      case SectionId::LowerCavity:
        apply_cavity_key(*config.lower_cavity, key, value, source_name, line);
        break;
      case SectionId::Sandwich:
        apply_sandwich_key(*config.sandwich, key, value, source_name, line);
        break;
      case SectionId::Pendulum:
        apply_pendulum_key(*config.pendulum, key, value, source_name, line);
        break;
      case SectionId::Loop:
        apply_loop_key(*config.loop, key, value, source_name, line);
        break;
      case SectionId::Simulation:
        apply_simulation_key(config.simulation, key, value, source_name, line);
        break;
      case SectionId::Sweep:
        apply_sweep_key(*config.sweep, key, value, source_name, line);
        break;
    }
  }
  return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const ExperimentConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw config_error("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), base);
}

const std::string& paper_profile_text() {
  static const std::string text = R"(# Built-in experiment profile: published sandwich / torsion-bar parameters.

[upper_cavity]
length = 0.1411
r_fixed = 0.075
r_lev = 0.075
finesse = 880
power = 29.7
power_sigma = 8.0
a_sigma = 0.0008
transmissivity = 0.0005
transmissivity_sigma = 0.0001

[lower_cavity]
length = 0.05
r_fixed = 0.075
r_lev = 0.075
finesse = 880
power = 1469
power_sigma = 0
a_sigma = 0.0008
transmissivity = 0.0005
transmissivity_sigma = 0.0001

[sandwich]
mass = 1e-6
curvature = 0.075
gravity = 9.8
k_opt_upper = 0.5
k_opt_lower = 0.5
power_upper = 200
power_lower = 1469

[pendulum]
inertia = 7.2e-6
lever_arm = 0.085
natural_frequency = 0.0322
quality_factor = 100
mass = 0.0088

[loop]
sensor_gain = 1e4
actuator_gain = 1e-6
filter_gain = 0.2
injection_amplitude = 0.05
injection_frequencies = 0.020, 0.026, 0.030, 0.033, 0.036, 0.040, 0.044, 0.050, 0.060, 0.080
feedback_sign = 1
force_noise_asd = 0
seismic_amplitude = 0
seismic_frequency = 0.05

[simulation]
dt = 0
settle_cycles = 6
measure_cycles = 8
seed = 1

[sweep]
powers = 0, 5.9, 11.6, 17.4, 23.2, 29.7
repeats = 1
)";
  return text;
}

ExperimentConfig paper_profile() {
  return parse_config(paper_profile_text(), "<built-in profile>");
}

ExperimentConfig apply_override(const ExperimentConfig& base,
                                const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw config_error("override \"" + assignment +
                       "\" must look like section.key=value");
  }
  const std::string lhs(trim(std::string_view(assignment).substr(0, eq)));
  const std::string value(trim(std::string_view(assignment).substr(eq + 1)));
  const std::size_t dot = lhs.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size() ||
      lhs.find('.', dot + 1) != std::string::npos) {
    throw config_error("override \"" + assignment +
                       "\" must look like section.key=value");
  }
  const std::string text =
      "[" + lhs.substr(0, dot) + "]\n" + lhs.substr(dot + 1) + " = " + value + "\n";
  return parse_config(text, "--set " + lhs, base);
}

optics::Cavity build_cavity(const CavitySection& section,
                            double power_override_w) {
  optics::Cavity cavity;
  cavity.length_m = section.length_m;
  cavity.finesse = section.finesse;
  cavity.intracavity_power_w =
      power_override_w >= 0.0 ? power_override_w : section.power_w;
  cavity.fixed_mirror.radius_of_curvature_m = section.r_fixed_m;
  cavity.fixed_mirror.power_transmissivity = section.transmissivity;
  cavity.levitated_mirror_curvature_m = section.r_lev_m;
  cavity.orientation = section.orientation;
  cavity.validate();
  require_non_negative(section.power_sigma_w, "cavity power_sigma");
  require_non_negative(section.a_sigma_m, "cavity a_sigma");
  require_non_negative(section.transmissivity_sigma,
                       "cavity transmissivity_sigma");
  return cavity;
}

optics::SandwichConfig build_sandwich(const ExperimentConfig& config) {
  if (!config.upper_cavity) {
    throw config_error("missing [upper_cavity] section");
  }
  if (!config.lower_cavity) {
    throw config_error("missing [lower_cavity] section");
  }
  if (!config.sandwich) {
    throw config_error("missing [sandwich] section");
  }
  const SandwichSection& s = *config.sandwich;
  optics::SandwichConfig sandwich;
  sandwich.upper = build_cavity(*config.upper_cavity, s.power_upper_w);
  sandwich.lower = build_cavity(*config.lower_cavity, s.power_lower_w);
  sandwich.mirror_mass_kg = s.mass_kg;
  sandwich.mirror_curvature_m = s.curvature_m;
  sandwich.gravity_m_s2 = s.gravity_m_s2;
  sandwich.k_opt_upper_n_per_m = s.k_opt_upper_n_per_m;
  sandwich.k_opt_lower_n_per_m = s.k_opt_lower_n_per_m;
  sandwich.validate();
  return sandwich;
}

mech::TorsionalPendulum build_pendulum(const ExperimentConfig& config) {
  if (!config.pendulum) {
    throw config_error("missing [pendulum] section");
  }
  const PendulumSection& s = *config.pendulum;
  mech::TorsionalPendulum pendulum;
  pendulum.inertia_kg_m2 = s.inertia_kg_m2;
  pendulum.lever_arm_m = s.lever_arm_m;
  pendulum.natural_frequency_hz = s.natural_frequency_hz;
  pendulum.quality_factor = s.quality_factor;
  pendulum.mass_kg = s.mass_kg;
  pendulum.validate();
  return pendulum;
}

loop::LoopConfig build_loop(const ExperimentConfig& config,
                            double k_ext_n_per_m) {
  if (!config.loop) {
    throw config_error("missing [loop] section");
  }
  const LoopSection& s = *config.loop;
  require_positive(s.sensor_gain_v_per_m, "loop sensor_gain");
  require_positive(s.actuator_gain_n_per_v, "loop actuator_gain");
  require_positive(s.filter_gain, "loop filter_gain");
  require_non_negative(s.injection_amplitude_v, "loop injection_amplitude");
  require_non_negative(s.force_noise_asd_n_rthz, "loop force_noise_asd");
  require_non_negative(s.seismic_amplitude_n, "loop seismic_amplitude");
  if (s.feedback_sign != 1.0 && s.feedback_sign != -1.0) {
    throw config_error("loop feedback_sign must be 1 or -1");
  }
  loop::LoopConfig out;
  out.plant =
      loop::PendulumBlock::from_pendulum(build_pendulum(config), k_ext_n_per_m);
  out.sensor_gain_v_per_m = s.sensor_gain_v_per_m;
  out.filter = loop::make_filter(s.filter_gain);
  out.actuator_gain_n_per_v = s.actuator_gain_n_per_v;
  out.feedback_sign = s.feedback_sign;
  out.control_on = true;
  out.validate();
  return out;
}

}  // namespace optolev::cfg
