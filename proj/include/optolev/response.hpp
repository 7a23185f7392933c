#pragma once

#include <complex>
#include <filesystem>
#include <vector>

namespace optolev::est {

struct ResponsePoint {
  double f_hz = 0.0;
  std::complex<double> value;
  bool confident = true;
};

// One measured transfer function: points sorted by frequency (repeated
// frequencies are kept as independent measurements) plus the measurement
// context.
struct FrequencyResponse {
  std::vector<ResponsePoint> points;
  double power_w = 0.0;
  double power_sigma_w = 0.0;
  int repeat_index = 0;

  void sort_by_frequency();
};

// Columns: f_Hz,re_G,im_G,mag_dB,phase_deg,confidence
void write_response_csv(const FrequencyResponse& response,
                        const std::filesystem::path& path);

}  // namespace optolev::est
