#include "optolev/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "optolev/common.hpp"

namespace optolev {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw config_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw config_error("cannot rename " + tmp.string() + " to " + path.string());
}

double magnitude_db(double abs_value) { return 20.0 * std::log10(abs_value); }

}  // namespace optolev
