#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "optolev/common.hpp"

namespace optolev {

// Rational transfer function in first-order corner form:
//   gain * prod(1 + i omega / (2 pi f_zero)) / prod(1 + i omega / (2 pi f_pole))
// for the e^{+i omega t} sign convention. All corners are positive real
// frequencies in Hz, so the DC value is exactly `gain`.
struct LtiBlock {
  std::vector<double> zero_corners_hz;
  std::vector<double> pole_corners_hz;
  double gain = 1.0;
  std::string label = "custom";

  void validate() const;
  std::complex<double> eval(double omega_rad_s) const;
  double max_corner_hz() const;
};

// Controllable-canonical state-space realization of a proper LtiBlock
// (no more zeros than poles), used to run the block inside the time-domain
// loop simulation.
class StateSpace {
 public:
  static StateSpace realize(const LtiBlock& block);

  std::size_t order() const { return den_.size(); }

  // dstate = A state + B input for the canonical form.
  void derivative(const double* state, double input, double* dstate) const;

  // y = C state + D input.
  double output(const double* state, double input) const;

 private:
  std::vector<double> den_;  // monic denominator coefficients a0..a_{n-1}
  std::vector<double> num_;  // strictly proper numerator coefficients b0..b_{n-1}
  double feedthrough_ = 0.0;
};

}  // namespace optolev
