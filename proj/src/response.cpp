#include "optolev/response.hpp"

#include <algorithm>
#include <string>

#include "optolev/common.hpp"
#include "optolev/csvio.hpp"

namespace optolev::est {

void FrequencyResponse::sort_by_frequency() {
  std::stable_sort(points.begin(), points.end(),
                   [](const ResponsePoint& a, const ResponsePoint& b) {
                     return a.f_hz < b.f_hz;
                   });
}

void write_response_csv(const FrequencyResponse& response,
                        const std::filesystem::path& path) {
  std::string out = "f_Hz,re_G,im_G,mag_dB,phase_deg,confidence\n";
  for (const ResponsePoint& p : response.points) {
    const double mag = std::abs(p.value);
    const double phase_deg = std::arg(p.value) * 180.0 / kPi;
    out += fmt17(p.f_hz);
    out += ',';
    out += fmt17(p.value.real());
    out += ',';
    out += fmt17(p.value.imag());
    out += ',';
    out += fmt17(magnitude_db(mag));
    out += ',';
    out += fmt17(phase_deg);
    out += ',';
    out += p.confident ? '1' : '0';
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace optolev::est
