#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "optolev/mechanics.hpp"

using namespace optolev;
using namespace optolev::mech;

namespace {

TorsionalPendulum reference_pendulum() {
  TorsionalPendulum p;
  p.inertia_kg_m2 = 7.2e-6;
  p.lever_arm_m = 0.085;
  p.natural_frequency_hz = 0.0322;
  p.quality_factor = 100.0;
  p.mass_kg = 0.0088;
  return p;
}

constexpr double kKappa = 0.039341814083235090;

}  // namespace

TEST_CASE("reduced mass at the lever arm") {
  CHECK(reference_pendulum().reduced_mass_kg() ==
        doctest::Approx(9.9653979238754325e-4).epsilon(1e-14));
}

TEST_CASE("static response and resonance of the bare pendulum") {
  const auto p = reference_pendulum();
  const auto dc = pendulum_tf(p, 0.0);
  CHECK(dc.real() == doctest::Approx(24515.111615042474).epsilon(1e-12));
  CHECK(dc.imag() == 0.0);

  const auto peak = pendulum_tf(p, p.omega0_rad_s());
  CHECK(std::abs(peak) ==
        doctest::Approx(2451511.1615042474).epsilon(1e-10));
  CHECK(std::arg(peak) == doctest::Approx(-kPi / 2).epsilon(1e-12));

  const auto far = pendulum_tf(p, 1e4 * p.omega0_rad_s());
  CHECK(std::abs(far) < 1.0);
  CHECK(std::arg(far) < -3.13);
  CHECK(std::arg(far) > -kPi);
}

TEST_CASE("phase falls monotonically from 0 to -180 degrees") {
  const auto p = reference_pendulum();
  double previous = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double f = 1e-4 * std::pow(10.0, 7.0 * i / 400.0);
    const double phase = std::arg(pendulum_tf(p, kTwoPi * f));
    CHECK(phase <= previous + 1e-12);
    previous = phase;
  }
}

TEST_CASE("zero external spring reproduces the bare response exactly") {
  const auto p = reference_pendulum();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> expo(-4.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double omega = kTwoPi * std::pow(10.0, expo(rng));
    CHECK(effective_tf(p, 0.0, omega) == pendulum_tf(p, omega));
  }
}

TEST_CASE("shifted resonance frequency") {
  const auto p = reference_pendulum();
  CHECK(effective_frequency(p, 0.0) ==
        doctest::Approx(0.0322).epsilon(1e-14));
  CHECK(effective_frequency(p, 2.84e-5) ==
        doctest::Approx(0.041937074915700954).epsilon(1e-13));
  CHECK(effective_frequency(p, 2.2262592421090148e-5) ==
        doctest::Approx(0.040033936885606642).epsilon(1e-13));
  CHECK(effective_frequency(p, 3.37e-5) ==
        doctest::Approx(0.043513618197271294).epsilon(1e-13));
}

TEST_CASE("anti-springs at or beyond the critical value are rejected") {
  const auto p = reference_pendulum();
  const double kc = critical_spring(p);
  CHECK(kc == doctest::Approx(4.0791166514061471e-5).epsilon(1e-13));
  CHECK_THROWS_AS(effective_frequency(p, -1.0000001 * kc), anti_spring_error);
  CHECK_THROWS_AS(effective_frequency(p, -1.01 * kc), anti_spring_error);
  CHECK_THROWS_AS(effective_tf(p, -1.01 * kc, 0.1), anti_spring_error);
  CHECK_NOTHROW(effective_frequency(p, -0.999 * kc));

  // Power-of-two inertia and lever arm make the cancellation exact, so the
  // marginal spring lands on omega_eff^2 == 0 with no rounding slack.
  TorsionalPendulum exact;
  exact.inertia_kg_m2 = 1.0;
  exact.lever_arm_m = 2.0;
  exact.natural_frequency_hz = 0.03125;
  exact.quality_factor = 64.0;
  CHECK_THROWS_AS(effective_frequency(exact, -critical_spring(exact)),
                  anti_spring_error);
  CHECK_THROWS_AS(effective_tf(exact, -critical_spring(exact), 0.1),
                  anti_spring_error);
}

TEST_CASE("spring from a measured frequency shift") {
  CHECK(spring_from_shift(7.2e-6, 0.085, 0.0322, 0.0435) ==
        doctest::Approx(3.3653381184940129e-5).epsilon(1e-13));
  CHECK(std::abs(spring_from_shift(7.2e-6, 0.085, 0.0322, 0.0435) - 3.37e-5) <
        5e-8);
  CHECK(spring_from_shift(7.2e-6, 0.085, 0.0322, 0.0322) == 0.0);

  double previous = -1.0;
  for (double f_eff : {0.033, 0.036, 0.040, 0.044, 0.050}) {
    const double k = spring_from_shift(7.2e-6, 0.085, 0.0322, f_eff);
    CHECK(k > previous);
    previous = k;
  }
}

TEST_CASE("frequency shift and spring recovery invert each other") {
  const auto p = reference_pendulum();
  const double kc = critical_spring(p);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-0.999, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = uni(rng) * kc;
    const double f_eff = effective_frequency(p, k);
    const double k_back =
        spring_from_shift(p.inertia_kg_m2, p.lever_arm_m,
                          p.natural_frequency_hz, f_eff);
    CHECK(std::abs(k_back - k) <= 1e-12 * std::abs(k));
  }
}

TEST_CASE("response peak sits at the shifted resonance") {
  const auto p = reference_pendulum();
  for (double q : {10.0, 100.0}) {
    TorsionalPendulum pq = p;
    pq.quality_factor = q;
    for (double k : {0.0, 1.5e-5, 2.84e-5}) {
      const double f_eff = effective_frequency(pq, k);
      const int n = 100;
      const double step = f_eff * 0.4 / n;
      double best_f = 0.0;
      double best_mag = -1.0;
      for (int i = 0; i <= n; ++i) {
        const double f = f_eff * 0.8 + step * i;
        const double mag = std::abs(effective_tf(pq, k, kTwoPi * f));
        if (mag > best_mag) {
          best_mag = mag;
          best_f = f;
        }
      }
      CHECK(std::abs(best_f - f_eff) <= 1.01 * (step + f_eff / (4 * q * q)));
    }
  }
}

TEST_CASE("frequency uncertainties propagate into the spring") {
  const auto est = spring_uncertainty(7.2e-6, 0.085, {0.0322, 0.0011},
                                      {0.0435, 0.0004});
  CHECK(est.k_n_per_m ==
        doctest::Approx(3.3653381184940129e-5).epsilon(1e-13));
  CHECK(est.sigma_n_per_m ==
        doctest::Approx(3.1051000246608984e-6).epsilon(1e-12));
  CHECK(std::abs(est.sigma_n_per_m - 3.1e-6) < 1e-8);

  const auto exact = spring_uncertainty(7.2e-6, 0.085, {0.0322, 0.0},
                                        {0.0435, 0.0});
  CHECK(exact.sigma_n_per_m == 0.0);

  const auto doubled = spring_uncertainty(7.2e-6, 0.085, {0.0322, 0.0022},
                                          {0.0435, 0.0008});
  CHECK(doubled.sigma_n_per_m ==
        doctest::Approx(2.0 * est.sigma_n_per_m).epsilon(1e-14));
}

TEST_CASE("kappa prefactor matches the definition") {
  const double k = spring_from_shift(7.2e-6, 0.085, 0.0322, 0.0435);
  const double shift = 0.0435 * 0.0435 - 0.0322 * 0.0322;
  CHECK(k / shift == doctest::Approx(kKappa).epsilon(1e-14));
}

TEST_CASE("pendulum parameter validation") {
  TorsionalPendulum p = reference_pendulum();
  p.inertia_kg_m2 = 0.0;
  CHECK_THROWS_AS(p.validate(), invalid_parameter);
  p = reference_pendulum();
  p.lever_arm_m = -0.1;
  CHECK_THROWS_AS(p.validate(), invalid_parameter);
  p = reference_pendulum();
  p.natural_frequency_hz = 0.0;
  CHECK_THROWS_AS(p.validate(), invalid_parameter);
  p = reference_pendulum();
  p.quality_factor = 0.0;
  CHECK_THROWS_AS(p.validate(), invalid_parameter);

  CHECK_THROWS_AS(pendulum_tf(reference_pendulum(), -1.0), invalid_parameter);
  CHECK_THROWS_AS(spring_from_shift(0.0, 0.085, 0.0322, 0.0435),
                  invalid_parameter);
  CHECK_THROWS_AS(spring_from_shift(7.2e-6, 0.085, 0.0322, -0.04),
                  invalid_parameter);
}
