#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optolev/commands.hpp"
#include "optolev/common.hpp"
#include "optolev/config.hpp"

using namespace optolev;

int main(int argc, char** argv) {
  CLI::App app{"levitated-mirror sandwich simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string profile;
  std::string out_dir = ".";
  std::string format = "csv";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int jobs = 1;

  app.add_option("--config", config_path,
                 "sectioned key = value configuration file");
  app.add_option("--profile", profile, "built-in parameter set (paper)");
  app.add_option("--out", out_dir, "directory for CSV output")
      ->capture_default_str();
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override the simulation seed");
  app.add_option("--jobs", jobs, "parallel simulation runs")
      ->capture_default_str();
  app.add_option("--format", format, "output format")->capture_default_str();
  app.add_option("--set", overrides,
                 "override a config value as section.key=value")
      ->take_all();

  CLI::App* stability =
      app.add_subcommand("stability", "static restoring-force analysis of the "
                                      "sandwich configuration");
  CLI::App* bode = app.add_subcommand(
      "bode", "analytic frequency response of a loop block");
  std::string block = "G";
  double fmin = 1e-3;
  double fmax = 100.0;
  int points = 200;
  bode->add_option("--block", block, "H, Hprime, F, S, A, G or Gprime")
      ->capture_default_str();
  bode->add_option("--fmin", fmin, "start frequency in Hz")
      ->capture_default_str();
  bode->add_option("--fmax", fmax, "stop frequency in Hz")
      ->capture_default_str();
  bode->add_option("--points", points, "number of rows")
      ->capture_default_str();
  CLI::App* measure = app.add_subcommand(
      "measure", "virtual laser-off/laser-on spring measurement");
  app.add_subcommand("sweep", "spring constant versus intracavity power");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg::ExperimentConfig config;
    if (!profile.empty()) {
      if (profile != "paper") {
        throw config_error("unknown profile \"" + profile + "\"");
      }
      config = cfg::paper_profile();
    }
    if (!config_path.empty()) {
      config = cfg::load_config_file(config_path, config);
    }
    for (const std::string& assignment : overrides) {
      config = cfg::apply_override(config, assignment);
    }
    if (seed_opt->count() > 0) {
      config.simulation.seed = seed;
    }
    if (format != "csv") {
      throw config_error("unsupported format \"" + format + "\"");
    }
    if (jobs < 1) {
      throw config_error("--jobs must be at least 1");
    }

    cmd::Options options;
    options.out_dir = out_dir;
    options.jobs = jobs;
    if (stability->parsed()) {
      return cmd::run_stability(config, options, std::cout);
    }
    if (bode->parsed()) {
      return cmd::run_bode(config, block, fmin, fmax, points, options,
                           std::cout);
    }
    if (measure->parsed()) {
      return cmd::run_measure(config, options, std::cout);
    }
    return cmd::run_sweep(config, options, std::cout);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const invalid_parameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const physics_error& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
