#pragma once

#include <cstdio>
#include <string>

namespace plotsteal {

// %.17g round-trips doubles exactly; used wherever values are re-read.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Fixed human-facing metric format.
inline std::string fmt_f6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace plotsteal
