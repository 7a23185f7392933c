#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "optolev/common.hpp"
#include "optolev/mechanics.hpp"
#include "optolev/response.hpp"

namespace optolev::est {

struct FitResult {
  Uncertain freq_hz;
  Uncertain quality;
  Uncertain gain;
  double residual_deg = 0.0;  // RMS phase residual
  bool converged = false;
};

// Two-stage resonance fit on a measured plant response. Stage one fits the
// unwrapped phase of a second-order resonance (resonance frequency, quality
// factor, constant phase offset) by damped Gauss-Newton from a coarse grid
// seed. Stage two fits the magnitude scale with the shape frozen.
// Uncertainties come from the local quadratic expansion of the cost.
FitResult fit_resonance(const FrequencyResponse& response);

// P = P_transmitted / T with first-order propagation of the transmissivity
// uncertainty and of the transmitted-power fluctuation.
Uncertain intracavity_power(double transmitted_w, double transmitted_sigma_w,
                            const Uncertain& transmissivity);

// Mean and sample standard deviation of the fitted resonance frequencies of
// repeated measurements; requires at least two converged fits.
Uncertain aggregate_repeats(std::span<const FitResult> fits);

struct PowerPoint {
  Uncertain power_w;
  mech::SpringEstimate spring;
};

struct PointVerdict {
  PowerPoint point;
  Interval band;
  bool consistent = false;  // one-sigma interval overlaps the predicted band
};

struct SweepReport {
  std::vector<PointVerdict> points;
  double slope_n_per_m_w = 0.0;
  double slope_sigma = 0.0;
  double analytic_slope_n_per_m_w = 0.0;
  double rel_fit_residual = 0.0;
  bool all_consistent = false;
  std::string summary() const;
};

// Per-point band consistency plus an inverse-variance-weighted linear fit
// k = slope * P anchored through the zero-power point.
SweepReport power_sweep_analysis(std::span<const PowerPoint> points,
                                 std::span<const Interval> bands,
                                 double analytic_slope_n_per_m_w);

// Columns: P_W,sigma_P_W,k_Npm,sigma_k_Npm,band_lo_Npm,band_hi_Npm,consistent
void write_sweep_csv(const SweepReport& report,
                     const std::filesystem::path& path);

}  // namespace optolev::est
