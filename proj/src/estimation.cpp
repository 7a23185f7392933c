#include "optolev/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "optolev/csvio.hpp"

namespace optolev::est {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kRelStepTolerance = 1e-9;

struct PhasePoint {
  double omega;
  double phase;  // unwrapped, radians
};

// Second-order resonance phase, continuous from 0 down to -pi as omega grows.
double model_phase(double omega, double omega_e, double q) {
  const double d = omega_e * omega_e - omega * omega;
  const double n = omega * omega_e / q;
  return -std::atan2(n, d);
}

// Partial derivatives of model_phase with respect to omega_e and ln Q.
void model_phase_grad(double omega, double omega_e, double q, double* d_omega_e,
                      double* d_lnq) {
  const double d = omega_e * omega_e - omega * omega;
  const double n = omega * omega_e / q;
  const double denom = d * d + n * n;
  // d/dx (-atan2(n, d)) = -(d * dn - n * dd) / (n^2 + d^2)
  *d_omega_e = -(d * (omega / q) - n * (2.0 * omega_e)) / denom;
  *d_lnq = -(d * (-n)) / denom;
}

double profiled_offset(const std::vector<PhasePoint>& pts, double omega_e,
                       double q) {
  double acc = 0.0;
  for (const PhasePoint& p : pts) {
    acc += p.phase - model_phase(p.omega, omega_e, q);
  }
  return acc / static_cast<double>(pts.size());
}

double cost(const std::vector<PhasePoint>& pts, double omega_e, double q,
            double offset) {
  double ssr = 0.0;
  for (const PhasePoint& p : pts) {
    const double r = p.phase - model_phase(p.omega, omega_e, q) - offset;
    ssr += r * r;
  }
  return ssr;
}

// Solves the 3x3 normal equations by Gaussian elimination with pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>* x) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double acc = b[row];
    for (int k = row + 1; k < 3; ++k) acc -= a[row][k] * (*x)[k];
    (*x)[row] = acc / a[row][row];
  }
  return true;
}

// Inverse of a symmetric positive-definite 3x3 matrix via the adjugate.
bool invert3(const std::array<std::array<double, 3>, 3>& m,
             std::array<std::array<double, 3>, 3>* inv) {
  const double det =
      m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
      m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
      m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (!(std::abs(det) > 1e-300)) return false;
  const double s = 1.0 / det;
  (*inv)[0][0] = s * (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
  (*inv)[0][1] = s * (m[0][2] * m[2][1] - m[0][1] * m[2][2]);
  (*inv)[0][2] = s * (m[0][1] * m[1][2] - m[0][2] * m[1][1]);
  (*inv)[1][0] = s * (m[1][2] * m[2][0] - m[1][0] * m[2][2]);
  (*inv)[1][1] = s * (m[0][0] * m[2][2] - m[0][2] * m[2][0]);
  (*inv)[1][2] = s * (m[0][2] * m[1][0] - m[0][0] * m[1][2]);
  (*inv)[2][0] = s * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  (*inv)[2][1] = s * (m[0][1] * m[2][0] - m[0][0] * m[2][1]);
  (*inv)[2][2] = s * (m[0][0] * m[1][1] - m[0][1] * m[1][0]);
  return true;
}

}  // namespace

FitResult fit_resonance(const FrequencyResponse& response) {
  std::vector<ResponsePoint> pts;
  pts.reserve(response.points.size());
  for (const ResponsePoint& p : response.points) {
    if (p.confident) pts.push_back(p);
  }
  std::stable_sort(pts.begin(), pts.end(),
                   [](const ResponsePoint& a, const ResponsePoint& b) {
                     return a.f_hz < b.f_hz;
                   });
  const std::size_t n = pts.size();
  if (n < 5) {
    throw invalid_parameter("resonance fit needs at least 5 confident points");
  }

  // Unwrap the measured phase by nearest-multiple-of-2pi continuation along
  // increasing frequency.
  std::vector<PhasePoint> phase(n);
  for (std::size_t j = 0; j < n; ++j) {
    double raw = std::arg(pts[j].value);
    if (j > 0) {
      raw += kTwoPi * std::round((phase[j - 1].phase - raw) / kTwoPi);
    }
    phase[j] = {kTwoPi * pts[j].f_hz, raw};
  }

  const auto [min_it, max_it] =
      std::minmax_element(phase.begin(), phase.end(),
                          [](const PhasePoint& a, const PhasePoint& b) {
                            return a.phase < b.phase;
                          });
  if (max_it->phase - min_it->phase < 0.5 * kPi) {
    throw no_resonance_in_band(
        "phase flip is not bracketed by the measured frequency span");
  }

  const double f_lo = pts.front().f_hz;
  const double f_hi = pts.back().f_hz;

  // Coarse grid seed over (resonance frequency, quality factor).
  double best_we = kTwoPi * 0.5 * (f_lo + f_hi);
  double best_q = 10.0;
  double best_cost = std::numeric_limits<double>::infinity();
  constexpr int kFreqGrid = 64;
  constexpr int kQGrid = 33;
  for (int fi = 0; fi < kFreqGrid; ++fi) {
    const double f = f_lo + (f_hi - f_lo) * (fi + 0.5) / kFreqGrid;
    const double we = kTwoPi * f;
    for (int qi = 0; qi < kQGrid; ++qi) {
      const double q = std::pow(10.0, 4.0 * qi / (kQGrid - 1));
      const double offset = profiled_offset(phase, we, q);
      const double c = cost(phase, we, q, offset);
      if (c < best_cost) {
        best_cost = c;
        best_we = we;
        best_q = q;
      }
    }
  }

  // Damped Gauss-Newton on (omega_e, ln Q, offset).
  double we = best_we;
  double lnq = std::log(best_q);
  double offset = profiled_offset(phase, we, best_q);
  double ssr = cost(phase, we, std::exp(lnq), offset);
  bool converged = false;
  std::array<std::array<double, 3>, 3> jtj{};
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const double q = std::exp(lnq);
    jtj = {};
    std::array<double, 3> jtr{};
    for (const PhasePoint& p : phase) {
      double d_we = 0.0, d_lnq = 0.0;
      model_phase_grad(p.omega, we, q, &d_we, &d_lnq);
      const std::array<double, 3> row{d_we, d_lnq, 1.0};
      const double r = p.phase - model_phase(p.omega, we, q) - offset;
      for (int i = 0; i < 3; ++i) {
        jtr[i] += row[i] * r;
        for (int k = 0; k < 3; ++k) jtj[i][k] += row[i] * row[k];
      }
    }
    std::array<double, 3> step{};
    if (!solve3(jtj, jtr, &step)) break;

    double scale = 1.0;
    double new_ssr = ssr;
    double new_we = we, new_lnq = lnq, new_offset = offset;
    bool improved = false;
    for (int halving = 0; halving < 25; ++halving) {
      new_we = we + scale * step[0];
      new_lnq = std::clamp(lnq + scale * step[1], std::log(0.1), std::log(1e8));
      new_offset = offset + scale * step[2];
      if (new_we > 0.0) {
        new_ssr = cost(phase, new_we, std::exp(new_lnq), new_offset);
        if (new_ssr <= ssr) {
          improved = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!improved) {
      converged = true;  // stuck at the numerical minimum
      break;
    }
    const double rel_step =
        std::max({std::abs(new_we - we) / we, std::abs(new_lnq - lnq),
                  std::abs(new_offset - offset) / kTwoPi});
    we = new_we;
    lnq = new_lnq;
    offset = new_offset;
    ssr = new_ssr;
    if (rel_step < kRelStepTolerance) {
      converged = true;
      break;
    }
  }
  const double q = std::exp(lnq);

  // Local quadratic expansion: covariance = ssr/(n-3) * (J^T J)^-1.
  FitResult result;
  const double variance = ssr / static_cast<double>(n - 3);
  std::array<std::array<double, 3>, 3> cov{};
  if (invert3(jtj, &cov)) {
    result.freq_hz.sigma =
        std::sqrt(std::max(0.0, variance * cov[0][0])) / kTwoPi;
    result.quality.sigma = q * std::sqrt(std::max(0.0, variance * cov[1][1]));
  }
  result.freq_hz.value = we / kTwoPi;
  result.quality.value = q;
  result.converged = converged;
  result.residual_deg =
      std::sqrt(ssr / static_cast<double>(n)) * 180.0 / kPi;

  // Magnitude scale with the fitted shape frozen.
  double lg_acc = 0.0;
  std::vector<double> lg(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double omega = phase[j].omega;
    const double d = we * we - omega * omega;
    const double nn = omega * we / q;
    lg[j] = std::log(std::abs(pts[j].value)) + 0.5 * std::log(d * d + nn * nn);
    lg_acc += lg[j];
  }
  const double lg_mean = lg_acc / static_cast<double>(n);
  double lg_var = 0.0;
  for (double v : lg) lg_var += (v - lg_mean) * (v - lg_mean);
  lg_var /= static_cast<double>(n - 1);
  result.gain.value = std::exp(lg_mean);
  result.gain.sigma =
      result.gain.value * std::sqrt(lg_var / static_cast<double>(n));
  return result;
}

Uncertain intracavity_power(double transmitted_w, double transmitted_sigma_w,
                            const Uncertain& transmissivity) {
  if (!(transmitted_w >= 0.0) || transmitted_sigma_w < 0.0) {
    throw invalid_parameter("transmitted power must be non-negative");
  }
  if (!(transmissivity.value > 0.0) || transmissivity.value > 1.0 ||
      transmissivity.sigma < 0.0) {
    throw invalid_parameter("transmissivity must lie in (0, 1]");
  }
  Uncertain power;
  power.value = transmitted_w / transmissivity.value;
  const double from_t = power.value * transmissivity.sigma / transmissivity.value;
  const double from_p = transmitted_sigma_w / transmissivity.value;
  power.sigma = std::hypot(from_t, from_p);
  return power;
}

Uncertain aggregate_repeats(std::span<const FitResult> fits) {
  std::vector<double> freqs;
  for (const FitResult& fit : fits) {
    if (fit.converged) freqs.push_back(fit.freq_hz.value);
  }
  if (freqs.size() < 2) {
    throw insufficient_repeats(
        "need at least two converged fits to aggregate repeats");
  }
  const double mean = std::accumulate(freqs.begin(), freqs.end(), 0.0) /
                      static_cast<double>(freqs.size());
  double var = 0.0;
  for (double f : freqs) var += (f - mean) * (f - mean);
  var /= static_cast<double>(freqs.size() - 1);
  return {mean, std::sqrt(var)};
}

SweepReport power_sweep_analysis(std::span<const PowerPoint> points,
                                 std::span<const Interval> bands,
                                 double analytic_slope_n_per_m_w) {
  if (points.size() != bands.size()) {
    throw invalid_parameter("each sweep point needs a predicted band");
  }
  if (points.size() < 2) {
    throw invalid_parameter("power sweep needs at least two points");
  }
  bool has_zero = false;
  for (const PowerPoint& p : points) {
    if (!(p.power_w.value >= 0.0)) {
      throw invalid_parameter("powers must be non-negative");
    }
    if (p.power_w.value == 0.0) has_zero = true;
  }
  if (!has_zero) {
    throw invalid_parameter("power sweep needs the zero-power reference point");
  }

  SweepReport report;
  report.analytic_slope_n_per_m_w = analytic_slope_n_per_m_w;
  report.points.reserve(points.size());
  bool all_ok = true;
  bool all_weighted = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& spring = points[i].spring;
    const Interval measured{spring.k_n_per_m - spring.sigma_n_per_m,
                            spring.k_n_per_m + spring.sigma_n_per_m};
    const bool ok = measured.overlaps(bands[i]);
    all_ok = all_ok && ok;
    if (!(spring.sigma_n_per_m > 0.0)) all_weighted = false;
    report.points.push_back({points[i], bands[i], ok});
  }
  report.all_consistent = all_ok;

  // Weighted least squares for k = slope * P through the origin; noiseless
  // inputs (zero sigma anywhere) fall back to uniform weights.
  double sum_wpk = 0.0, sum_wpp = 0.0;
  for (const PowerPoint& p : points) {
    const double w =
        all_weighted ? 1.0 / (p.spring.sigma_n_per_m * p.spring.sigma_n_per_m)
                     : 1.0;
    sum_wpk += w * p.power_w.value * p.spring.k_n_per_m;
    sum_wpp += w * p.power_w.value * p.power_w.value;
  }
  if (!(sum_wpp > 0.0)) {
    throw invalid_parameter("power sweep needs a nonzero power point");
  }
  report.slope_n_per_m_w = sum_wpk / sum_wpp;

  double rss = 0.0, kss = 0.0;
  for (const PowerPoint& p : points) {
    const double r =
        p.spring.k_n_per_m - report.slope_n_per_m_w * p.power_w.value;
    rss += r * r;
    kss += p.spring.k_n_per_m * p.spring.k_n_per_m;
  }
  report.rel_fit_residual = kss > 0.0 ? std::sqrt(rss / kss) : 0.0;
  if (all_weighted) {
    report.slope_sigma = std::sqrt(1.0 / sum_wpp);
  } else {
    const double var = rss / static_cast<double>(points.size() - 1);
    report.slope_sigma = std::sqrt(var / sum_wpp);
  }
  return report;
}

std::string SweepReport::summary() const {
  std::string out;
  out += "power sweep: " + std::to_string(points.size()) + " points, ";
  out += all_consistent ? "all consistent with the predicted bands\n"
                        : "INCONSISTENT with the predicted bands\n";
  for (const PointVerdict& v : points) {
    out += "  P = " + fmt17(v.point.power_w.value) + " W: k = " +
           fmt17(v.point.spring.k_n_per_m) + " +/- " +
           fmt17(v.point.spring.sigma_n_per_m) + " N/m, band [" +
           fmt17(v.band.lo) + ", " + fmt17(v.band.hi) + "] N/m -> " +
           (v.consistent ? "ok" : "OUTSIDE") + "\n";
  }
  out += "fitted slope = " + fmt17(slope_n_per_m_w) + " +/- " +
         fmt17(slope_sigma) + " N/(m W), analytic 2/(a c) = " +
         fmt17(analytic_slope_n_per_m_w) + " N/(m W)\n";
  out += "relative fit residual = " + fmt17(rel_fit_residual) + "\n";
  return out;
}

void write_sweep_csv(const SweepReport& report,
                     const std::filesystem::path& path) {
  std::string out =
      "P_W,sigma_P_W,k_Npm,sigma_k_Npm,band_lo_Npm,band_hi_Npm,consistent\n";
  for (const PointVerdict& v : report.points) {
    out += fmt17(v.point.power_w.value);
    out += ',';
    out += fmt17(v.point.power_w.sigma);
    out += ',';
    out += fmt17(v.point.spring.k_n_per_m);
    out += ',';
    out += fmt17(v.point.spring.sigma_n_per_m);
    out += ',';
    out += fmt17(v.band.lo);
    out += ',';
    out += fmt17(v.band.hi);
    out += ',';
    out += v.consistent ? '1' : '0';
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace optolev::est
