#include "optolev/lti.hpp"

#include <algorithm>
#include <cmath>

namespace optolev {

namespace {

// Expands prod(s + roots[i]) into ascending power coefficients.
std::vector<double> poly_from_corner_roots(const std::vector<double>& corners_rad) {
  std::vector<double> coeffs{1.0};
  for (double c : corners_rad) {
    std::vector<double> next(coeffs.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i] * c;
      next[i + 1] += coeffs[i];
    }
    coeffs = std::move(next);
  }
  return coeffs;
}

}  // namespace

void LtiBlock::validate() const {
  if (!std::isfinite(gain) || gain == 0.0) {
    throw invalid_parameter("block gain must be finite and nonzero");
  }
  for (double f : zero_corners_hz) {
    if (!std::isfinite(f) || f <= 0.0) {
      throw invalid_parameter("zero corner frequencies must be positive");
    }
  }
  for (double f : pole_corners_hz) {
    if (!std::isfinite(f) || f <= 0.0) {
      throw invalid_parameter("pole corner frequencies must be positive");
    }
  }
}

std::complex<double> LtiBlock::eval(double omega_rad_s) const {
  validate();
  std::complex<double> value(gain, 0.0);
  for (double f : zero_corners_hz) {
    value *= std::complex<double>(1.0, omega_rad_s / (kTwoPi * f));
  }
  for (double f : pole_corners_hz) {
    value /= std::complex<double>(1.0, omega_rad_s / (kTwoPi * f));
  }
  return value;
}

double LtiBlock::max_corner_hz() const {
  double m = 0.0;
  for (double f : zero_corners_hz) m = std::max(m, f);
  for (double f : pole_corners_hz) m = std::max(m, f);
  return m;
}

StateSpace StateSpace::realize(const LtiBlock& block) {
  block.validate();
  if (block.zero_corners_hz.size() > block.pole_corners_hz.size()) {
    throw invalid_parameter(
        "block is improper: more zeros than poles, no state-space form");
  }
  std::vector<double> zeros_rad(block.zero_corners_hz.size());
  std::vector<double> poles_rad(block.pole_corners_hz.size());
  std::transform(block.zero_corners_hz.begin(), block.zero_corners_hz.end(),
                 zeros_rad.begin(), [](double f) { return kTwoPi * f; });
  std::transform(block.pole_corners_hz.begin(), block.pole_corners_hz.end(),
                 poles_rad.begin(), [](double f) { return kTwoPi * f; });

  // gain * prod(1 + s/wz)/prod(1 + s/wp)
  //   = gain * (prod wp / prod wz) * prod(s + wz)/prod(s + wp)
  double scale = block.gain;
  for (double wp : poles_rad) scale *= wp;
  for (double wz : zeros_rad) scale /= wz;

  std::vector<double> den = poly_from_corner_roots(poles_rad);  // monic
  std::vector<double> num = poly_from_corner_roots(zeros_rad);
  for (double& b : num) b *= scale;

  const std::size_t n = poles_rad.size();
  StateSpace ss;
  ss.den_.assign(den.begin(), den.begin() + static_cast<std::ptrdiff_t>(n));
  ss.num_.assign(n, 0.0);
  if (num.size() == n + 1) {
    // Biproper: peel off the feedthrough, leave a strictly proper remainder.
    ss.feedthrough_ = num.back();
    for (std::size_t i = 0; i < n; ++i) {
      ss.num_[i] = num[i] - ss.feedthrough_ * ss.den_[i];
    }
  } else {
    ss.feedthrough_ = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) ss.num_[i] = num[i];
  }
  return ss;
}

void StateSpace::derivative(const double* state, double input,
                            double* dstate) const {
  const std::size_t n = den_.size();
  if (n == 0) return;
  for (std::size_t i = 0; i + 1 < n; ++i) dstate[i] = state[i + 1];
  double acc = input;
  for (std::size_t i = 0; i < n; ++i) acc -= den_[i] * state[i];
  dstate[n - 1] = acc;
}

double StateSpace::output(const double* state, double input) const {
  double y = feedthrough_ * input;
  for (std::size_t i = 0; i < den_.size(); ++i) y += num_[i] * state[i];
  return y;
}

}  // namespace optolev
