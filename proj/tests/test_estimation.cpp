#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "optolev/estimation.hpp"
#include "optolev/mechanics.hpp"
#include "optolev/optics.hpp"

using namespace optolev;
using namespace optolev::est;

namespace {

mech::TorsionalPendulum reference_pendulum() {
  mech::TorsionalPendulum p;
  p.inertia_kg_m2 = 7.2e-6;
  p.lever_arm_m = 0.085;
  p.natural_frequency_hz = 0.0322;
  p.quality_factor = 100.0;
  p.mass_kg = 0.0088;
  return p;
}

const std::vector<double>& measurement_grid() {
  static const std::vector<double> grid{0.020, 0.026, 0.030, 0.033, 0.036,
                                        0.040, 0.044, 0.050, 0.060, 0.080};
  return grid;
}

FrequencyResponse synthetic_response(double k_ext, double phase_noise_rad,
                                     std::mt19937_64* rng) {
  const auto p = reference_pendulum();
  FrequencyResponse r;
  std::normal_distribution<double> gauss(0.0, phase_noise_rad);
  for (double f : measurement_grid()) {
    auto v = mech::effective_tf(p, k_ext, kTwoPi * f);
    if (rng != nullptr && phase_noise_rad > 0.0) {
      v *= std::polar(1.0, gauss(*rng));
    }
    r.points.push_back({f, v, true});
  }
  return r;
}

FitResult converged_fit(double f_hz) {
  FitResult fit;
  fit.freq_hz = {f_hz, 1e-4};
  fit.quality = {100.0, 5.0};
  fit.gain = {1003.47, 1.0};
  fit.converged = true;
  return fit;
}

}  // namespace

TEST_CASE("noiseless resonance fit recovers the model parameters") {
  const auto fit = fit_resonance(synthetic_response(0.0, 0.0, nullptr));
  CHECK(fit.converged);
  CHECK(fit.freq_hz.value == doctest::Approx(0.0322).epsilon(1e-7));
  CHECK(fit.quality.value == doctest::Approx(100.0).epsilon(1e-5));
  CHECK(fit.gain.value == doctest::Approx(1003.4722222222222).epsilon(1e-6));
  CHECK(fit.residual_deg < 1e-5);

  const double k = 2.2262592421090148e-5;
  const auto shifted = fit_resonance(synthetic_response(k, 0.0, nullptr));
  CHECK(shifted.freq_hz.value ==
        doctest::Approx(0.040033936885606642).epsilon(1e-7));
  CHECK(shifted.quality.value == doctest::Approx(100.0).epsilon(1e-5));
}

TEST_CASE("fit is invariant under a complex scale of the data") {
  auto base = synthetic_response(1.5e-5, 0.0, nullptr);
  auto scaled = base;
  const std::complex<double> c(2.7, -1.3);
  for (auto& p : scaled.points) p.value *= c;

  const auto f1 = fit_resonance(base);
  const auto f2 = fit_resonance(scaled);
  CHECK(f2.freq_hz.value ==
        doctest::Approx(f1.freq_hz.value).epsilon(1e-9));
  CHECK(f2.quality.value == doctest::Approx(f1.quality.value).epsilon(1e-7));
  CHECK(f2.gain.value ==
        doctest::Approx(std::abs(c) * f1.gain.value).epsilon(1e-7));
}

TEST_CASE("phase noise widens but does not break the fit") {
  // The transition region of a Q = 100 resonance is about 1% wide, so the
  // sweep must sample inside it for Q to be constrained at all.
  const auto p = reference_pendulum();
  const double f0 = p.natural_frequency_hz;
  const std::vector<double> mult = {0.7,   0.85, 0.95,  0.99, 0.995, 1.0,
                                    1.005, 1.01, 1.05, 1.15, 1.3};
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> gauss(0.0, 5.0 * kPi / 180.0);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    FrequencyResponse r;
    for (double m : mult) {
      const auto v = mech::pendulum_tf(p, kTwoPi * f0 * m) *
                     std::polar(1.0, gauss(rng));
      r.points.push_back({f0 * m, v, true});
    }
    const auto fit = fit_resonance(r);
    if (!fit.converged) continue;
    CHECK(fit.freq_hz.sigma > 0.0);
    if (std::abs(fit.freq_hz.value - f0) < 0.02 * f0 &&
        std::abs(fit.quality.value - 100.0) < 20.0) {
      ++good;
    }
  }
  CHECK(good >= 16);
}

TEST_CASE("flat response has no resonance to fit") {
  FrequencyResponse flat;
  for (double f : measurement_grid()) {
    flat.points.push_back({f, {1.0, 0.0}, true});
  }
  CHECK_THROWS_AS(fit_resonance(flat), no_resonance_in_band);
}

TEST_CASE("fit needs five confident points") {
  auto r = synthetic_response(0.0, 0.0, nullptr);
  r.points.resize(4);
  CHECK_THROWS_AS(fit_resonance(r), invalid_parameter);

  auto flagged = synthetic_response(0.0, 0.0, nullptr);
  for (std::size_t i = 0; i + 4 < flagged.points.size(); ++i) {
    flagged.points[i].confident = false;
  }
  CHECK_THROWS_AS(fit_resonance(flagged), invalid_parameter);
}

TEST_CASE("unconfident points are excluded from the fit") {
  auto r = synthetic_response(0.0, 0.0, nullptr);
  // Poison two points but flag them, so the fit must ignore them.
  r.points[0].value *= std::polar(1.0, 2.5);
  r.points[0].confident = false;
  r.points[9].value *= 50.0;
  r.points[9].confident = false;
  const auto fit = fit_resonance(r);
  CHECK(fit.converged);
  CHECK(fit.freq_hz.value == doctest::Approx(0.0322).epsilon(1e-6));
  CHECK(fit.residual_deg < 1e-5);
}

TEST_CASE("transmitted power maps into the resonator") {
  const auto p = intracavity_power(14.85e-3, 0.0, {0.0005, 0.0});
  CHECK(p.value == doctest::Approx(29.7).epsilon(1e-14));
  CHECK(p.sigma == 0.0);

  const auto with_t = intracavity_power(14.85e-3, 0.0, {0.0005, 0.0001});
  CHECK(with_t.sigma == doctest::Approx(5.94).epsilon(1e-12));

  const auto zero = intracavity_power(0.0, 0.0, {0.0005, 0.0001});
  CHECK(zero.value == 0.0);

  const double forward = 29.7 * 0.0005;
  CHECK(intracavity_power(forward, 0.0, {0.0005, 0.0}).value ==
        doctest::Approx(29.7).epsilon(1e-14));

  CHECK_THROWS_AS(intracavity_power(1e-3, 0.0, {0.0, 0.0}), invalid_parameter);
  CHECK_THROWS_AS(intracavity_power(1e-3, 0.0, {1.5, 0.0}), invalid_parameter);
  CHECK_THROWS_AS(intracavity_power(-1e-3, 0.0, {0.0005, 0.0}),
                  invalid_parameter);
  CHECK_THROWS_AS(intracavity_power(1e-3, -1e-5, {0.0005, 0.0}),
                  invalid_parameter);
}

TEST_CASE("repeated fits aggregate into mean and scatter") {
  std::vector<FitResult> fits{converged_fit(0.0431), converged_fit(0.0435),
                              converged_fit(0.0439)};
  const auto agg = aggregate_repeats(fits);
  CHECK(agg.value == doctest::Approx(0.0435).epsilon(1e-14));
  CHECK(agg.sigma == doctest::Approx(0.0004).epsilon(1e-12));

  std::vector<FitResult> reversed{fits[2], fits[1], fits[0]};
  const auto swapped = aggregate_repeats(reversed);
  CHECK(swapped.value == doctest::Approx(agg.value).epsilon(1e-15));
  CHECK(swapped.sigma == doctest::Approx(agg.sigma).epsilon(1e-14));

  std::vector<FitResult> same{converged_fit(0.04), converged_fit(0.04),
                              converged_fit(0.04)};
  CHECK(aggregate_repeats(same).sigma == 0.0);
}

TEST_CASE("aggregation needs two converged fits") {
  std::vector<FitResult> fits{converged_fit(0.0435)};
  CHECK_THROWS_AS(aggregate_repeats(fits), insufficient_repeats);

  FitResult failed = converged_fit(0.0431);
  failed.converged = false;
  std::vector<FitResult> mixed{converged_fit(0.0435), failed};
  CHECK_THROWS_AS(aggregate_repeats(mixed), insufficient_repeats);

  mixed.push_back(converged_fit(0.0439));
  const auto agg = aggregate_repeats(mixed);
  CHECK(agg.value == doctest::Approx(0.0437).epsilon(1e-12));
}

TEST_CASE("power sweep with exactly linear springs") {
  const double slope = 7.4958223640034168e-7;
  const std::vector<double> powers{0.0, 5.9, 11.6, 17.4, 23.2, 29.7};
  const double rel_sigma = 8.0 / 29.7;

  std::vector<PowerPoint> points;
  std::vector<Interval> bands;
  for (double pw : powers) {
    PowerPoint pt;
    pt.power_w = {pw, pw * rel_sigma};
    pt.spring = {slope * pw, 1e-9};
    points.push_back(pt);
    bands.push_back(optics::predicted_spring_band({0.0089, 0.0008},
                                                  {pw, pw * rel_sigma}));
  }

  const auto report = power_sweep_analysis(points, bands, slope);
  CHECK(report.slope_n_per_m_w == doctest::Approx(slope).epsilon(1e-12));
  CHECK(report.rel_fit_residual < 1e-12);
  CHECK(report.all_consistent);
  CHECK(report.points.size() == 6);
  CHECK(report.slope_sigma > 0.0);
  CHECK(report.points[0].consistent);
  CHECK(report.summary().find("slope") != std::string::npos);
  CHECK(report.summary().find("all consistent") != std::string::npos);
}

TEST_CASE("an inconsistent point is called out") {
  const double slope = 7.4958223640034168e-7;
  std::vector<PowerPoint> points;
  std::vector<Interval> bands;
  for (double pw : {0.0, 15.0, 29.7}) {
    PowerPoint pt;
    pt.power_w = {pw, 0.0};
    pt.spring = {slope * pw, 1e-9};
    points.push_back(pt);
    bands.push_back(optics::predicted_spring_band({0.0089, 0.0008},
                                                  {pw, 0.27 * pw}));
  }
  points[1].spring.k_n_per_m *= 3.0;
  const auto report = power_sweep_analysis(points, bands, slope);
  CHECK_FALSE(report.all_consistent);
  CHECK_FALSE(report.points[1].consistent);
  CHECK(report.points[2].consistent);
  CHECK(report.summary().find("INCONSISTENT") != std::string::npos);
}

TEST_CASE("power sweep validation") {
  PowerPoint zero;
  zero.power_w = {0.0, 0.0};
  zero.spring = {0.0, 1e-9};
  PowerPoint one;
  one.power_w = {29.7, 0.0};
  one.spring = {2.2e-5, 1e-9};
  const Interval band{1e-5, 3e-5};

  std::vector<PowerPoint> mismatch{zero, one};
  std::vector<Interval> single_band{band};
  CHECK_THROWS_AS(power_sweep_analysis(mismatch, single_band, 1.0),
                  invalid_parameter);

  std::vector<PowerPoint> lonely{one};
  CHECK_THROWS_AS(power_sweep_analysis(lonely, single_band, 1.0),
                  invalid_parameter);

  std::vector<PowerPoint> no_zero{one, one};
  std::vector<Interval> two_bands{band, band};
  CHECK_THROWS_AS(power_sweep_analysis(no_zero, two_bands, 1.0),
                  invalid_parameter);

  PowerPoint negative = one;
  negative.power_w.value = -3.0;
  std::vector<PowerPoint> bad{zero, negative};
  CHECK_THROWS_AS(power_sweep_analysis(bad, two_bands, 1.0),
                  invalid_parameter);
}

TEST_CASE("spring recovery through the fitted frequencies") {
  const auto p = reference_pendulum();
  const double k_true = 2.84e-5;
  const auto off = fit_resonance(synthetic_response(0.0, 0.0, nullptr));
  const auto on = fit_resonance(synthetic_response(k_true, 0.0, nullptr));
  const auto spring = mech::spring_uncertainty(
      p.inertia_kg_m2, p.lever_arm_m, {off.freq_hz.value, off.freq_hz.sigma},
      {on.freq_hz.value, on.freq_hz.sigma});
  CHECK(spring.k_n_per_m == doctest::Approx(k_true).epsilon(1e-6));
}
